"""Quadrature grids and integration of curvature densities.

Per-coordinate rules: equispaced trapezoid on periodic coordinates
(spectrally accurate for smooth periodic integrands) and Gauss-Legendre on
the rest; products are tensor grids.  Node ordering is C order over the
coordinate axes and the final reduction is a fixed pairwise tree over node
index ranges, so results are bit-identical for any worker count.
"""

import concurrent.futures
from dataclasses import dataclass

import numpy as np

from . import backend
from .errors import ConfigError
from .geometry import bundle_from_batch, curvature_batch, cylinder_extend, signature_counts

_TREE_LEAF = 64
_CHUNK = 2048


@dataclass(frozen=True)
class QuadGrid:
    """Tensor-product quadrature grid over a chart."""

    chart: object
    points: np.ndarray     # (N, n)
    weights: np.ndarray    # (N,)
    rules: tuple           # per-coordinate rule descriptor
    resolution: tuple

    def __len__(self):
        return self.points.shape[0]


def gauss_legendre_rule(lo, hi, count):
    x, w = np.polynomial.legendre.leggauss(count)
    half = 0.5 * (hi - lo)
    return lo + half * (x + 1.0), half * w


def trapezoid_periodic_rule(lo, hi, count):
    h = (hi - lo) / count
    return lo + h * np.arange(count), np.full(count, h)


def build_grid(m, resolution=None):
    """Tensor grid for a metric field; resolution is per-coordinate counts.

    A single integer applies to every coordinate; None uses the field's
    default resolution.
    """
    if resolution is None:
        resolution = m.default_resolution
    if isinstance(resolution, (int, np.integer)):
        resolution = (int(resolution),) * m.dim
    resolution = tuple(int(r) for r in resolution)
    if len(resolution) != m.dim:
        raise ConfigError(
            f"resolution needs {m.dim} entries for {m.name!r}, got {len(resolution)}")
    if any(r < 2 for r in resolution):
        raise ConfigError("resolution must be at least 2 per coordinate")
    axes, wts, rules = [], [], []
    for (lo, hi), per, count in zip(m.chart.domain, m.chart.periodic, resolution):
        if per:
            x, w = trapezoid_periodic_rule(lo, hi, count)
            rules.append(f"trapezoid_periodic({count})")
        else:
            x, w = gauss_legendre_rule(lo, hi, count)
            rules.append(f"gauss_legendre({count})")
        axes.append(x)
        wts.append(w)
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([a.reshape(-1) for a in mesh], axis=1)
    wmesh = np.meshgrid(*wts, indexing="ij")
    weights = np.ones(pts.shape[0])
    for w in wmesh:
        weights = weights * w.reshape(-1)
    return QuadGrid(m.chart, pts, weights, tuple(rules), resolution)


def tree_sum(values):
    """Deterministic pairwise reduction in fixed index order."""
    values = np.asarray(values, dtype=float)

    def rec(lo, hi):
        if hi - lo <= _TREE_LEAF:
            total = 0.0
            for i in range(lo, hi):
                total += values[i]
            return total
        mid = (lo + hi) // 2
        return rec(lo, mid) + rec(mid, hi)

    return rec(0, len(values))


def node_densities(m, f, grid, params=None, chunk=_CHUNK, threads=None):
    """f(curvature) * vol_density at every node, in node order.

    f is either a per-point callable of a CurvatureBundle or an object with
    a .batch(CurvatureBatch) method (the shipped densities provide both).
    Chunk boundaries are independent of the worker count, so the per-node
    values do not depend on parallelism.
    """
    npts = len(grid)
    out = np.empty(npts)
    ranges = [(lo, min(lo + chunk, npts)) for lo in range(0, npts, chunk)]

    def eval_range(lo, hi):
        batch = curvature_batch(m, grid.points[lo:hi], params)
        if hasattr(f, "batch"):
            vals = np.asarray(f.batch(batch), dtype=float)
        else:
            vals = np.array([f(bundle_from_batch(batch, i))
                             for i in range(hi - lo)])
        return vals * batch.vol_density

    workers = threads if threads is not None else backend.thread_count()
    workers = max(1, min(workers, len(ranges)))
    if workers == 1:
        for lo, hi in ranges:
            out[lo:hi] = eval_range(lo, hi)
    else:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
            futures = {pool.submit(eval_range, lo, hi): (lo, hi)
                       for lo, hi in ranges}
            errors = []
            for fut in concurrent.futures.as_completed(futures):
                lo, hi = futures[fut]
                try:
                    out[lo:hi] = fut.result()
                except Exception as exc:
                    errors.append((lo, exc))
            if errors:
                errors.sort(key=lambda e: e[0])
                raise errors[0][1]
    return out


def integrate_density(m, f, grid, params=None, chunk=_CHUNK, threads=None):
    """Integral of f over the manifold: sum of weight * f * vol_density."""
    dens = node_densities(m, f, grid, params, chunk, threads)
    return tree_sum(grid.weights * dens)


def integrate_node_values(grid, values, vol_density):
    """Integral of precomputed per-node values against the volume form."""
    return tree_sum(grid.weights * np.asarray(values) * np.asarray(vol_density))


@dataclass(frozen=True)
class CylinderReport:
    metric: str
    k: int
    lhs: float            # integral over the cylinder X x S^1
    rhs: float            # 2 pi times the base integral
    rel_error: float
    passed: bool


def cylinder_integral_check(m, k, resolution=None, circle_count=8,
                            tolerance=1e-8, params=None, threads=None):
    """Check the cylinder integral relation.

    The integral of P_k(g + dtheta^2) over X x S^1 must equal 2 pi times
    the integral of P_k(g) over X; the extension is flat in the circle
    direction, so both sides are computed fully independently.
    """
    from .invariants import pfaffian_density

    base_grid = build_grid(m, resolution)
    ext = cylinder_extend(m)
    ext_res = base_grid.resolution + (circle_count,)
    ext_grid = build_grid(ext, ext_res)
    dens = pfaffian_density(k)
    lhs = integrate_density(ext, dens, ext_grid, params, threads=threads)
    rhs = 2.0 * np.pi * integrate_density(m, dens, base_grid, params, threads=threads)
    denom = max(abs(lhs), abs(rhs), 1e-14)
    rel = abs(lhs - rhs) / denom
    return CylinderReport(m.name, k, float(lhs), float(rhs), float(rel),
                          rel <= tolerance)


def check_signature(m, grid, params=None, chunk=65536):
    """Certify |det g| > 1e-10 and the declared sign counts on grid nodes.

    Value-only metric evaluation in chunks; default product grids can run
    to millions of nodes.
    """
    from .geometry import metric_values

    min_det = np.inf
    ok_sig = True
    npts = len(grid)
    for lo in range(0, npts, chunk):
        g = metric_values(m, grid.points[lo:lo + chunk], params)
        det = np.linalg.det(g)
        min_det = min(min_det, float(np.abs(det).min()))
        eig = np.linalg.eigvalsh(g)
        plus = (eig > 0).sum(axis=1)
        minus = (eig < 0).sum(axis=1)
        ok_sig = ok_sig and bool(np.all(plus == m.signature[0])
                                 and np.all(minus == m.signature[1]))
    return {
        "det_ok": min_det > 1e-10,
        "signature_ok": ok_sig,
        "min_abs_det": min_det,
    }
