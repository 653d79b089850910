"""Charts, metric fields and the per-point curvature pipeline.

A metric lives on a single chart whose boundary is a measure-zero set of
the underlying manifold (e.g. sphere poles), so integrals over the chart
equal integrals over the manifold.  Components are expression trees over
the chart coordinates plus named parameters; evaluation in jets supplies
the exact first and second derivatives the curvature tensor needs.

Sign conventions (pinned in conventions.md):

    Gamma^a_bc = g^{ad} (d_b g_dc + d_c g_bd - d_d g_bc) / 2
    R^a_bcd    = d_c Gamma^a_db - d_d Gamma^a_cb
                 + Gamma^a_ce Gamma^e_db - Gamma^a_de Gamma^e_cb
    Ric_bd     = R^a_bad ,   s = g^{bd} Ric_bd

which makes the scalar curvature of the unit round sphere positive.
"""

from dataclasses import dataclass, field

import numpy as np

from . import backend, exprlang
from .errors import EvalError, SingularMetricError
from .jets import Jet2, jet_var
from .tenalg import LOWER, UPPER, PointTensor


@dataclass(frozen=True)
class Chart:
    """Coordinate chart with per-coordinate intervals and periodicity."""

    name: str
    coords: tuple
    domain: tuple          # ((lo, hi), ...) per coordinate
    periodic: tuple        # (bool, ...) per coordinate
    measure_note: str = ""

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(self.coords))
        object.__setattr__(self, "domain", tuple(tuple(map(float, d)) for d in self.domain))
        object.__setattr__(self, "periodic", tuple(bool(p) for p in self.periodic))
        if not (len(self.coords) == len(self.domain) == len(self.periodic)):
            raise ValueError("coords, domain and periodic must have equal length")
        for name, (lo, hi) in zip(self.coords, self.domain):
            if not lo < hi:
                raise ValueError(f"empty interval for coordinate {name!r}")

    @property
    def dim(self):
        return len(self.coords)


@dataclass(frozen=True)
class MetricField:
    """Metric on a chart: symmetric matrix of component expressions.

    parameters maps names to default values; family_params names the
    subset meant to be swept over (smooth families of metrics).  signature
    is the (n_plus, n_minus) eigenvalue sign count the field is certified
    for; expected_chi is the Euler characteristic of the underlying
    manifold when known.
    """

    name: str
    chart: Chart
    components: tuple       # n x n nested tuple of ExprNode, symmetric
    signature: tuple
    parameters: tuple = ()  # ((name, default), ...)
    expected_chi: int | None = None
    family_params: tuple = ()
    default_resolution: tuple = ()

    def __post_init__(self):
        n = self.chart.dim
        comps = tuple(tuple(row) for row in self.components)
        if len(comps) != n or any(len(row) != n for row in comps):
            raise ValueError("component matrix must be n x n")
        for i in range(n):
            for j in range(i + 1, n):
                if comps[i][j] is not comps[j][i]:
                    raise ValueError("g_ij and g_ji must reference the same tree")
        allowed = set(self.chart.coords) | {p for p, _ in self.parameters}
        for row in comps:
            for entry in row:
                exprlang.validate_names(entry, allowed)
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "parameters", tuple(self.parameters))
        object.__setattr__(self, "signature", tuple(int(v) for v in self.signature))
        object.__setattr__(self, "family_params", tuple(self.family_params))
        object.__setattr__(self, "default_resolution",
                           tuple(int(r) for r in self.default_resolution))
        if sum(self.signature) != n:
            raise ValueError("signature must sum to the chart dimension")

    @property
    def dim(self):
        return self.chart.dim

    def param_defaults(self):
        return dict(self.parameters)

    def merged_params(self, params=None):
        merged = self.param_defaults()
        if params:
            unknown = set(params) - set(merged)
            if unknown:
                raise ValueError(f"unknown parameters for {self.name!r}: {sorted(unknown)}")
            merged.update({k: float(v) for k, v in params.items()})
        return merged


@dataclass(frozen=True)
class CurvatureBatch:
    """Curvature data at a batch of points (leading axis = point index)."""

    metric: MetricField
    points: np.ndarray       # (N, n)
    g: np.ndarray            # (N, n, n)
    g_inv: np.ndarray
    det_g: np.ndarray        # (N,)
    gamma: np.ndarray        # (N, n, n, n)
    riem_low: np.ndarray     # (N, n, n, n, n)
    riem_mixed: np.ndarray
    ricci: np.ndarray        # (N, n, n)
    scalar: np.ndarray       # (N,)
    vol_density: np.ndarray  # (N,)

    @property
    def dim(self):
        return self.g.shape[1]

    def __len__(self):
        return self.g.shape[0]


@dataclass(frozen=True)
class CurvatureBundle:
    """Per-point curvature package with tensor variance markers."""

    point: tuple
    g: PointTensor
    g_inv: PointTensor
    gamma: np.ndarray
    riem_low: PointTensor
    riem_mixed: PointTensor
    ricci: PointTensor
    scalar: float
    vol_density: float

    @property
    def dim(self):
        return self.g.dim


def bundle_from_batch(batch, i):
    n = batch.dim
    return CurvatureBundle(
        point=tuple(batch.points[i]),
        g=PointTensor(n, (LOWER, LOWER), batch.g[i]),
        g_inv=PointTensor(n, (UPPER, UPPER), batch.g_inv[i]),
        gamma=batch.gamma[i],
        riem_low=PointTensor(n, (LOWER,) * 4, batch.riem_low[i]),
        riem_mixed=PointTensor(n, (UPPER, UPPER, LOWER, LOWER), batch.riem_mixed[i]),
        ricci=PointTensor(n, (LOWER, LOWER), batch.ricci[i]),
        scalar=float(batch.scalar[i]),
        vol_density=float(batch.vol_density[i]),
    )


def _evaluate_metric_jets(m, pts, params):
    """Evaluate g and its first/second derivatives at a batch of points."""
    n = m.dim
    npts = pts.shape[0]
    bindings = {name: jet_var(i, pts[:, i], n) for i, name in enumerate(m.chart.coords)}
    bindings.update(m.merged_params(params))
    g = np.zeros((npts, n, n))
    dg = np.zeros((npts, n, n, n))
    ddg = np.zeros((npts, n, n, n, n))
    for i in range(n):
        for j in range(i, n):
            try:
                val = exprlang.eval_expr(m.components[i][j], bindings)
            except EvalError as exc:
                if exc.point is not None:
                    raise
                idx = getattr(exc.__cause__, "index", None)
                if idx is None and npts == 1:
                    idx = 0
                if idx is None:
                    raise
                raise EvalError(exc.message, exc.position, exc.source,
                                point=tuple(pts[idx])) from exc
            if isinstance(val, Jet2):
                g[:, i, j] = val.value
                dg[:, i, j, :] = val.grad
                ddg[:, i, j, :, :] = val.hess
            else:
                g[:, i, j] = val
            if j > i:
                g[:, j, i] = g[:, i, j]
                dg[:, j, i, :] = dg[:, i, j, :]
                ddg[:, j, i, :, :] = ddg[:, i, j, :, :]
    return g, dg, ddg


def curvature_batch(m, pts, params=None, kernels=None):
    """Curvature pipeline over a batch of chart points.

    pts has shape (N, n); returns a CurvatureBatch.  Raises
    SingularMetricError when the metric degenerates at some point, with
    that point attached.
    """
    kern = kernels if kernels is not None else backend
    pts = np.ascontiguousarray(np.atleast_2d(np.asarray(pts, dtype=float)))
    if pts.ndim != 2 or pts.shape[1] != m.dim:
        raise ValueError(f"points must have shape (N, {m.dim})")
    g, dg, ddg = _evaluate_metric_jets(m, pts, params)
    det = np.linalg.det(g)
    # Polar charts reach legitimately tiny determinants near their
    # measure-zero boundary, so smallness alone is not degeneracy.  A
    # genuine collapse crosses det = 0 and flips its sign relative to the
    # declared signature (det sign is (-1)^n_minus).
    scale = np.maximum(1.0, np.abs(g).max(axis=(1, 2)) ** m.dim)
    expected_sign = -1.0 if m.signature[1] % 2 else 1.0
    bad = (np.abs(det) < 1e-250 * scale) | (det * expected_sign <= 0.0)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise SingularMetricError("metric degenerate at evaluation point",
                                  point=tuple(pts[i]), det=float(det[i]))
    g_inv = np.linalg.inv(g)
    gamma, riem_low, riem_mixed, ricci, scalar = kern.curvature_fields(g, dg, ddg, g_inv)
    return CurvatureBatch(
        metric=m, points=pts, g=g, g_inv=g_inv, det_g=det,
        gamma=np.asarray(gamma), riem_low=np.asarray(riem_low),
        riem_mixed=np.asarray(riem_mixed), ricci=np.asarray(ricci),
        scalar=np.asarray(scalar), vol_density=np.sqrt(np.abs(det)),
    )


def curvature_at(m, x, params=None):
    """Curvature bundle at a single chart point."""
    batch = curvature_batch(m, np.asarray(x, dtype=float)[None, :], params)
    return bundle_from_batch(batch, 0)


def metric_values(m, pts, params=None):
    """Plain (derivative-free) metric components at a batch of points."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    n = m.dim
    npts = pts.shape[0]
    bindings = {name: pts[:, i] for i, name in enumerate(m.chart.coords)}
    bindings.update(m.merged_params(params))
    g = np.zeros((npts, n, n))
    for i in range(n):
        for j in range(i, n):
            g[:, i, j] = exprlang.eval_expr(m.components[i][j], bindings)
            if j > i:
                g[:, j, i] = g[:, i, j]
    return g


def signature_counts(m, pts, params=None):
    """Eigenvalue sign counts of g over the points: (n_plus, n_minus) arrays."""
    eig = np.linalg.eigvalsh(metric_values(m, pts, params))
    return (eig > 0).sum(axis=1), (eig < 0).sum(axis=1)


_EXT_COORD_BASE = "theta_ext"


def cylinder_extend(m):
    """Product with a unit circle: block-diagonal g + dtheta^2.

    The new periodic coordinate is appended last; the Euler characteristic
    of the product with S^1 is 0.
    """
    coord = _EXT_COORD_BASE
    k = 2
    while coord in m.chart.coords:
        coord = f"{_EXT_COORD_BASE}{k}"
        k += 1
    chart = Chart(
        name=f"{m.chart.name}_x_circle",
        coords=m.chart.coords + (coord,),
        domain=m.chart.domain + ((0.0, 2.0 * np.pi),),
        periodic=m.chart.periodic + (True,),
        measure_note=m.chart.measure_note,
    )
    n = m.dim
    zero = exprlang.const(0.0)
    one = exprlang.const(1.0)
    rows = []
    for i in range(n):
        rows.append(tuple(m.components[i]) + (zero,))
    rows.append(tuple([zero] * n) + (one,))
    return MetricField(
        name=f"cylinder({m.name})",
        chart=chart,
        components=tuple(rows),
        signature=(m.signature[0] + 1, m.signature[1]),
        parameters=m.parameters,
        expected_chi=0,
        family_params=m.family_params,
        default_resolution=m.default_resolution + (8,),
    )


def restrict_equator(t, m):
    """Pull a fully covariant tensor on the cylinder back to the base.

    Drops every component with an index in the appended coordinate slot and
    reindexes to the base chart.  The input must be all-lower; pullback of
    contravariant slots is undefined.
    """
    if isinstance(t, (int, float)):
        return float(t)
    if any(v != LOWER for v in t.variance):
        raise ValueError("equator restriction requires a fully covariant tensor")
    if t.rank == 0:
        return PointTensor(m.dim, (), t.components, t.tag)
    n = m.dim
    if t.dim != n + 1:
        raise ValueError(f"tensor lives in dim {t.dim}, expected {n + 1}")
    sl = (slice(0, n),) * t.rank
    return PointTensor(n, t.variance, t.components[sl], t.tag)
