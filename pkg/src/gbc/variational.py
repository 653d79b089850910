"""Numerical variational calculus for curvature actions.

The action of order k is S(g) = integral of P_k(g) Vol_g.  Its Gateaux
derivative along a symmetric perturbation h of the lower-index metric is
measured by central finite differences in the amplitude and extrapolated
in the step; independently, the Euler-Lagrange pairing

    dS(h) = integral of E^{ab} h_{ab} Vol_g ,   E = (1/2) N_k S_{2,k}

is computed from the curvature contraction.  The k = 0 case (volume
variation, E = g/2) pins the sign and the factor 1/2 of this pairing; the
k >= 1 agreement is the Lovelock identity.  Compact manifolds only, so
divergence terms integrate to zero and never contaminate the derivative.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import exprlang
from .catalog import scaled
from .errors import SingularMetricError
from .geometry import MetricField, curvature_batch
from .invariants import lovelock_components, normalization, pfaffian_density
from .quadrature import build_grid, integrate_density, integrate_node_values

DEFAULT_EPS = (1e-2, 5e-3, 2.5e-3)


@dataclass(frozen=True)
class Perturbation:
    """Symmetric 2-tensor of component expressions plus its amplitude name."""

    components: tuple      # n x n nested tuple of ExprNode, symmetric
    eps_name: str
    label: str = ""

    def __post_init__(self):
        comps = tuple(tuple(row) for row in self.components)
        n = len(comps)
        for i in range(n):
            for j in range(i + 1, n):
                if comps[i][j] is not comps[j][i]:
                    raise ValueError("h_ij and h_ji must reference the same tree")
        object.__setattr__(self, "components", comps)

    @property
    def dim(self):
        return len(self.components)


def zero_perturbation(m, eps_name="eps"):
    zero = exprlang.const(0.0)
    n = m.dim
    return Perturbation(tuple((zero,) * n for _ in range(n)), eps_name, "zero")


def random_perturbation(m, seed, terms=2, eps_name="eps"):
    """Seeded smooth perturbation adapted to the chart.

    Components are low-order trigonometric polynomials in the periodic
    coordinates; non-periodic coordinates contribute interval-vanishing
    factors sin(pi (u - lo) / (hi - lo))^2, which keeps perturbations of
    polar charts bounded relative to the metric near the chart boundary.
    """
    rng = np.random.default_rng(seed)
    coords = m.chart.coords
    n = m.dim

    def term_source(force_dc=False):
        factors = []
        for name, (lo, hi), per in zip(coords, m.chart.domain, m.chart.periodic):
            if per:
                # mode 0 keeps a constant factor; the first diagonal term is
                # forced to mode 0 so the volume derivative of a random
                # direction is never structurally zero (the k = 0
                # calibration needs generic directions)
                mode = 0 if force_dc else int(rng.integers(0, 3))
                if mode == 0:
                    continue
                phase = float(rng.uniform(0.0, 2.0 * math.pi))
                kind = "cos" if rng.integers(0, 2) else "sin"
                factors.append(f"{kind}({mode}*{name} + {phase!r})")
            else:
                # power 4 so the frame magnitude of h vanishes at the chart
                # boundary: polar charts close up smoothly only when the
                # perturbation decays at least two orders faster than the
                # metric there (a sin^2 envelope leaves an O(1) angular
                # perturbation at the pole and breaks diffeomorphism
                # invariance of the integral at first order)
                scale_ = math.pi / (hi - lo)
                mode = 0 if force_dc else int(rng.integers(0, 3))
                modulation = f"*cos({mode}*{name})" if mode else ""
                factors.append(f"sin({scale_!r}*({name} - {lo!r}))^4"
                               f"{modulation}")
        coeff = float(rng.uniform(-1.0, 1.0))
        if not factors:
            return repr(coeff)
        return f"{coeff!r}*" + "*".join(factors)

    entries = {}
    for i in range(n):
        for j in range(i, n):
            srcs = [term_source(force_dc=(i == j == 0 and t == 0))
                    for t in range(terms)]
            entries[(i, j)] = exprlang.parse(" + ".join(srcs))
    rows = [[None] * n for _ in range(n)]
    for (i, j), node in entries.items():
        rows[i][j] = node
        rows[j][i] = node
    return Perturbation(tuple(tuple(r) for r in rows), eps_name, f"seed{seed}")


def perturbed_field(m, h):
    """Metric family g + eps * h with eps a first-class parameter.

    The amplitude binds at evaluation time, so one parsed family serves
    every finite-difference step.
    """
    eps = h.eps_name
    taken = set(m.chart.coords) | {p for p, _ in m.parameters}
    if eps in taken:
        raise ValueError(f"amplitude name {eps!r} collides with the chart")
    if h.dim != m.dim:
        raise ValueError("perturbation dimension does not match the metric")
    eps_var = exprlang.var(eps)
    cache = {}

    def combine(gij, hij):
        key = (id(gij), id(hij))
        if key not in cache:
            scaled_h = exprlang.ExprNode("binary", "*", (eps_var, hij))
            cache[key] = exprlang.ExprNode("binary", "+", (gij, scaled_h))
        return cache[key]

    comps = tuple(tuple(combine(m.components[i][j], h.components[i][j])
                        for j in range(m.dim)) for i in range(m.dim))
    return MetricField(f"{m.name}+{eps}*h[{h.label}]", m.chart, comps,
                       m.signature, m.parameters + ((eps, 0.0),),
                       m.expected_chi, m.family_params, m.default_resolution)


def richardson_table(eps, values):
    """Neville extrapolation in eps^2 for central-difference data.

    Returns the full triangular table; the extrapolated derivative is the
    last entry of the last row.
    """
    eps = [float(e) for e in eps]
    table = [list(map(float, values))]
    col = list(map(float, values))
    for level in range(1, len(eps)):
        new = []
        for i in range(len(col) - 1):
            x0, x1 = eps[i] ** 2, eps[i + level] ** 2
            new.append((x0 * col[i + 1] - x1 * col[i]) / (x0 - x1))
        table.append(new)
        col = new
    return table


@dataclass(frozen=True)
class GateauxResult:
    value: float           # extrapolated derivative
    eps: tuple
    central: tuple         # raw central differences per eps
    action0: float


def action_value(m, k, grid, params=None, threads=None):
    return integrate_density(m, pfaffian_density(k), grid, params, threads=threads)


def gateaux_derivative(m, h, k, grid, eps=DEFAULT_EPS, params=None, threads=None):
    """Central-difference derivative of the P_k action along h.

    Evaluates S(g + eps h) for +/- each step, Richardson-extrapolates the
    central differences (O(eps^2) model), and reports the raw table.
    """
    eps = tuple(float(e) for e in eps)
    family = perturbed_field(m, h)
    merged = dict(params or {})

    def action(amplitude):
        merged[h.eps_name] = amplitude
        return action_value(family, k, grid, merged, threads=threads)

    base = action(0.0)
    central = []
    for e in eps:
        plus = action(+e)
        minus = action(-e)
        central.append((plus - minus) / (2.0 * e))
    table = richardson_table(eps, central)
    value = table[-1][-1] if len(eps) > 1 else central[0]
    return GateauxResult(float(value), eps, tuple(central), float(base))


def el_pairing(m, h, k, grid, params=None, threads=None):
    """Pairing integral of E^{ab} h_{ab} Vol_g with E = (1/2) N_k S_{2,k}.

    The indices of the Lovelock tensor are raised with g so the pairing
    matches a variation of the lower-index metric.
    """
    batch = curvature_batch(m, grid.points, params)
    s_low, _ = lovelock_components(batch.riem_mixed, batch.g, k)
    e_up = 0.5 * normalization(k) * np.einsum(
        "pac,pbd,pcd->pab", batch.g_inv, batch.g_inv, s_low, optimize=True)
    h_vals = _evaluate_perturbation(h, m, grid.points, params)
    density = np.einsum("pab,pab->p", e_up, h_vals)
    return float(integrate_node_values(grid, density, batch.vol_density))


def _evaluate_perturbation(h, m, pts, params=None):
    n = h.dim
    npts = pts.shape[0]
    bindings = {name: pts[:, i] for i, name in enumerate(m.chart.coords)}
    bindings.update(m.merged_params(params))
    out = np.zeros((npts, n, n))
    for i in range(n):
        for j in range(i, n):
            val = exprlang.eval_expr(h.components[i][j], bindings)
            out[:, i, j] = val
            if j > i:
                out[:, j, i] = out[:, i, j]
    return out


@dataclass(frozen=True)
class ELReport:
    """One Lovelock-identity comparison along one direction."""

    metric: str
    k: int
    direction: str
    fd_value: float
    pairing_value: float
    rel_error: float
    ratio: float            # fd / pairing where meaningful, else nan
    eps: tuple
    central: tuple
    passed: bool


def el_check(m, h, k, grid, eps=DEFAULT_EPS, tolerance=1e-4, params=None,
             threads=None):
    """Compare the finite-difference derivative with the pairing integral."""
    fd = gateaux_derivative(m, h, k, grid, eps, params, threads)
    pairing = el_pairing(m, h, k, grid, params, threads)
    denom = max(abs(fd.value), abs(pairing), 1e-14)
    rel = abs(fd.value - pairing) / denom
    ratio = fd.value / pairing if abs(pairing) > 1e-14 else float("nan")
    return ELReport(m.name, k, h.label, fd.value, pairing, float(rel),
                    float(ratio), fd.eps, fd.central, rel <= tolerance)


@dataclass(frozen=True)
class WeightReport:
    metric: str
    k: int
    dim: int
    expected_exponent: int      # n - 2k
    max_deviation: float
    scale_invariant: bool       # True iff n == 2k
    passed: bool


def weight_forcing_check(m, k, grid, lambdas=(0.5, 2.0), tolerance=1e-10,
                         params=None, threads=None):
    """Verify S(lam^2 g) = lam^(n - 2k) S(g) for the P_k action.

    The action is scale invariant exactly when n = 2k, the weight-forcing
    step of the uniqueness argument.
    """
    base = action_value(m, k, grid, params, threads=threads)
    exponent = m.dim - 2 * k
    dev = 0.0
    for lam in lambdas:
        lam = float(lam)
        val = action_value(scaled(m, lam), k, grid, params, threads=threads)
        expected = base * lam ** exponent
        dev = max(dev, abs(val - expected) / max(abs(base), 1e-14))
    return WeightReport(m.name, k, m.dim, exponent, float(dev),
                        exponent == 0, dev <= tolerance)


@dataclass(frozen=True)
class SweepRow:
    params: dict
    action: float | None
    degenerate: bool


@dataclass(frozen=True)
class SweepResult:
    metric: str
    k: int
    rows: tuple
    spread: float               # max - min over valid members
    max_abs_deviation: float    # from expected, when expected is not None
    expected: float | None
    passed: bool


def family_sweep(m, k, grid, samples, tolerance=1e-6, expected=None,
                 assert_mode="spread", params=None, threads=None):
    """Action over a grid of family parameter values.

    samples maps parameter names to value lists (cartesian product).
    Degenerate members are excluded and flagged.  assert_mode "spread"
    passes when max - min < tolerance; "expected" compares every member
    against the expected value.
    """
    names = sorted(samples)
    for name in names:
        if name not in {p for p, _ in m.parameters}:
            raise ValueError(f"{name!r} is not a parameter of {m.name!r}")
    combos = [()]
    for name in names:
        combos = [c + (float(v),) for c in combos for v in samples[name]]
    rows = []
    values = []
    for combo in combos:
        member = dict(zip(names, combo))
        merged = dict(params or {})
        merged.update(member)
        try:
            val = action_value(m, k, grid, merged, threads=threads)
        except SingularMetricError:
            rows.append(SweepRow(member, None, True))
            continue
        rows.append(SweepRow(member, float(val), False))
        values.append(float(val))
    if not values:
        return SweepResult(m.name, k, tuple(rows), float("nan"), float("nan"),
                           expected, False)
    spread = max(values) - min(values)
    max_dev = (max(abs(v - expected) for v in values)
               if expected is not None else float("nan"))
    if assert_mode == "expected":
        if expected is None:
            raise ValueError("assert_mode 'expected' needs an expected value")
        passed = max_dev <= tolerance
    else:
        passed = spread <= tolerance
    return SweepResult(m.name, k, tuple(rows), float(spread), float(max_dev),
                       expected, passed)
