"""Curvature invariants: raw contractions, normalized Pfaffian densities,
and the 2-covariant contraction whose vanishing in dimension 2k is the
dimensional curvature identity.

raw_k contracts k copies of the pair-raised curvature against the
2k-index generalized delta:

    raw_k = R^{b1 b2}_{c1 c2} ... R^{b(2k-1) b(2k)}_{c(2k-1) c(2k)}
            delta^{c1 ... c(2k)}_{b1 ... b(2k)} ,      raw_0 = 1.

The normalized scalar is P_k = raw_k / ((8 pi)^k k!); with this constant
the integral of P_k over a compact oriented 2k-manifold is the Euler
characteristic (times the signature factor).  The constant is pinned by
the unit 2-sphere (raw_1 = 2s = 4, area 4 pi, integral 2) and cross-checked
in dimension 4 against |Riem|^2 - 4 |Ric|^2 + s^2 and the product of
2-spheres; see conventions.md.

The Lovelock-type tensor uses one more metric factor and a (2k+1)-index
delta:

    S_{2,k}[i1, i2] = R...R g_{j i2} delta^{c1..c(2k) j}_{b1..b(2k) i1} ,

so S_{2,0} = g; S_{2,k} vanishes identically in dimension 2k (the delta
has 2k+1 antisymmetrized indices) and is the Euler-Lagrange tensor of the
P_k action up to the factor 1/2 verified in the variational module.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import backend, tenalg
from .geometry import (CurvatureBatch, bundle_from_batch, curvature_batch,
                       cylinder_extend, restrict_equator)
from .tenalg import LOWER, PointTensor, dense_delta, lovelock_plan, raw_plan


def weight_of(k, rank):
    """Homogeneity weight: -2k for the scalar invariant, 2-2k for S_{2,k}."""
    if rank == "scalar":
        return -2 * k
    if rank == "2-tensor":
        return 2 - 2 * k
    raise ValueError("rank must be 'scalar' or '2-tensor'")


@dataclass(frozen=True)
class InvariantSpec:
    """Bookkeeping for one invariant: order, normalization, weight."""

    k: int
    normalized: bool = True
    rank: str = "scalar"

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("k must be nonnegative")
        object.__setattr__(self, "weight", weight_of(self.k, self.rank))


def normalization(k):
    """N_k = 1 / ((8 pi)^k k!)."""
    return 1.0 / ((8.0 * math.pi) ** k * math.factorial(k))


def is_trivially_zero(k, dim):
    """True when 2k exceeds the dimension (delta vanishes by pigeonhole)."""
    return 2 * k > dim


def _as_batch_mixed(cb):
    if isinstance(cb, CurvatureBatch):
        return cb.riem_mixed, False
    return cb.riem_mixed.components[None, ...], True


def raw_invariant(cb, k, kernels=None):
    """raw_k on a CurvatureBundle (float) or CurvatureBatch ((N,) array)."""
    kern = kernels if kernels is not None else backend
    rm, single = _as_batch_mixed(cb)
    n = rm.shape[1]
    if k == 0:
        out = np.ones(rm.shape[0])
    elif is_trivially_zero(k, n):
        out = np.zeros(rm.shape[0])
    else:
        plan = raw_plan(n, k)
        out = np.asarray(kern.raw_sum(rm, plan.b, plan.c, plan.sign, k))
    return float(out[0]) if single else out


def pfaffian_invariant(cb, k, kernels=None):
    """P_k = N_k raw_k."""
    return raw_invariant(cb, k, kernels) * normalization(k)


def lovelock_components(rm, g, k, kernels=None):
    """Symmetrized S_{2,k} components plus the antisymmetric residue.

    rm is a batch of pair-raised curvature tensors (N, n, n, n, n); g the
    matching metric components (N, n, n).  Returns (sym, residue) where
    residue is the max-norm of the antisymmetric part per point.
    """
    kern = kernels if kernels is not None else backend
    n = rm.shape[1]
    if k == 0:
        sym = np.array(g, copy=True)
        return sym, np.zeros(rm.shape[0])
    plan = lovelock_plan(n, k)
    raw = np.asarray(kern.lovelock_sum(rm, g, plan.b, plan.c, plan.j,
                                       plan.i1, plan.sign, k))
    anti = 0.5 * (raw - raw.transpose(0, 2, 1))
    sym = 0.5 * (raw + raw.transpose(0, 2, 1))
    return sym, np.abs(anti).max(axis=(1, 2))


def lovelock_tensor(cb, k, normalized=False, kernels=None):
    """S_{2,k} as a symmetric 2-covariant PointTensor (or (N,n,n) batch).

    With normalized=True the tensor carries the same N_k factor as P_k,
    which is the normalization the variational pairing uses.
    """
    factor = normalization(k) if normalized else 1.0
    if isinstance(cb, CurvatureBatch):
        sym, _ = lovelock_components(cb.riem_mixed, cb.g, k, kernels)
        return factor * sym
    rm = cb.riem_mixed.components[None, ...]
    g = cb.g.components[None, ...]
    sym, _ = lovelock_components(rm, g, k, kernels)
    return PointTensor(cb.dim, (LOWER, LOWER), factor * sym[0])


# ---------------------------------------------------------------------------
# Brute-force oracles (dense delta built from an explicit permutation sum).
# They share nothing with the plan-based engine besides the curvature input.
# ---------------------------------------------------------------------------

def raw_invariant_bruteforce(rm_batch, k):
    """raw_k via the dense permutation-sum delta (oracle path)."""
    rm = np.asarray(rm_batch)
    n = rm.shape[1]
    if k == 0:
        return np.ones(rm.shape[0])
    if is_trivially_zero(k, n):
        return np.zeros(rm.shape[0])
    delta = dense_delta(n, 2 * k)
    letters = "abcdefgh"  # two per curvature factor: k <= 4
    ops, subs = [], []
    upper = []
    lower = []
    for j in range(k):
        bi, ci = letters[2 * j] + letters[2 * j + 1], letters[2 * j].upper() + letters[2 * j + 1].upper()
        subs.append("p" + bi + ci)
        ops.append(rm)
        lower.append(bi)
        upper.append(ci)
    subs.append("".join(upper) + "".join(lower))
    ops.append(delta)
    spec = ",".join(subs) + "->p"
    return np.einsum(spec, *ops, optimize=True)


def lovelock_bruteforce(rm_batch, g_batch, k):
    """Symmetrized S_{2,k} via the dense permutation-sum delta (oracle)."""
    rm = np.asarray(rm_batch)
    g = np.asarray(g_batch)
    n = rm.shape[1]
    if k == 0:
        return np.array(g, copy=True)
    if 2 * k + 1 > n:
        return np.zeros_like(g)
    delta = dense_delta(n, 2 * k + 1)
    letters = "abcdefgh"
    ops, subs = [], []
    upper, lower = [], []
    for j in range(k):
        bi = letters[2 * j] + letters[2 * j + 1]
        ci = bi.upper()
        subs.append("p" + bi + ci)
        ops.append(rm)
        lower.append(bi)
        upper.append(ci)
    subs.append("pJy")          # g_{j i2}
    ops.append(g)
    spec = (",".join(subs) + "," + "".join(upper) + "J" + "".join(lower) + "x"
            + "->pxy")
    ops.append(delta)
    raw = np.einsum(spec, *ops, optimize=True)
    return 0.5 * (raw + raw.transpose(0, 2, 1))


# ---------------------------------------------------------------------------
# Densities for quadrature: callable per point, vectorized over batches.
# ---------------------------------------------------------------------------

class Density:
    """Pointwise scalar function of the curvature, with a batch fast path."""

    def __init__(self, fn_batch, label):
        self._fn = fn_batch
        self.label = label

    def __call__(self, bundle):
        rm = bundle.riem_mixed.components[None, ...]
        g = bundle.g.components[None, ...]
        scal = np.array([bundle.scalar])
        return float(self._fn(rm, g, scal)[0])

    def batch(self, cbatch):
        return self._fn(cbatch.riem_mixed, cbatch.g, cbatch.scalar)


def pfaffian_density(k):
    nk = normalization(k)

    def fn(rm, g, scal):
        n = rm.shape[1]
        if k == 0:
            return np.full(rm.shape[0], nk)
        if is_trivially_zero(k, n):
            return np.zeros(rm.shape[0])
        plan = raw_plan(n, k)
        return nk * np.asarray(backend.raw_sum(rm, plan.b, plan.c, plan.sign, k))

    return Density(fn, f"P_{k}")


def raw_density(k):
    def fn(rm, g, scal):
        n = rm.shape[1]
        if k == 0:
            return np.ones(rm.shape[0])
        if is_trivially_zero(k, n):
            return np.zeros(rm.shape[0])
        plan = raw_plan(n, k)
        return np.asarray(backend.raw_sum(rm, plan.b, plan.c, plan.sign, k))

    return Density(fn, f"raw_{k}")


def unit_density():
    return Density(lambda rm, g, scal: np.ones(rm.shape[0]), "1")


def scalar_curvature_density():
    return Density(lambda rm, g, scal: np.array(scal, copy=True), "s")


# ---------------------------------------------------------------------------
# Property checks: homogeneity, dimensional reduction, identity sampling.
# ---------------------------------------------------------------------------

def random_chart_points(m, npoints, seed, margin=0.05):
    """Seeded points in the open chart, away from non-periodic endpoints."""
    rng = np.random.default_rng(seed)
    pts = np.empty((npoints, m.dim))
    for i, ((lo, hi), per) in enumerate(zip(m.chart.domain, m.chart.periodic)):
        pad = 0.0 if per else margin * (hi - lo)
        pts[:, i] = rng.uniform(lo + pad, hi - pad, npoints)
    return pts


@dataclass(frozen=True)
class HomogeneityReport:
    metric: str
    k: int
    rank: str
    lam: float
    weight: int
    max_deviation: float
    passed: bool


def homogeneity_check(m, k, lam, rank="scalar", npoints=20, seed=0,
                      tolerance=1e-10, params=None):
    """Compare the invariant on m and on scaled(m, lam) at shared points.

    Asserts T(lam^2 g) = lam^w T(g) with w = -2k (scalar) / 2-2k (2-tensor).
    """
    from .catalog import scaled  # local import: catalog builds on geometry

    lam = float(lam)
    w = weight_of(k, rank)
    pts = random_chart_points(m, npoints, seed)
    base = curvature_batch(m, pts, params)
    big = curvature_batch(scaled(m, lam), pts, params)
    if rank == "scalar":
        va = pfaffian_invariant(base, k)
        vb = pfaffian_invariant(big, k)
        ref = np.maximum(np.abs(va) * lam ** w, 1e-14)
        dev = float(np.max(np.abs(vb - va * lam ** w) / ref))
    else:
        ta = lovelock_tensor(base, k)
        tb = lovelock_tensor(big, k)
        ref = max(float(np.abs(ta).max()) * lam ** w, 1e-14)
        dev = float(np.abs(tb - ta * lam ** w).max() / ref)
    return HomogeneityReport(m.name, k, rank, lam, w, dev, dev <= tolerance)


@dataclass(frozen=True)
class ReductionReport:
    metric: str
    k: int
    npoints: int
    max_dev_scalar: float
    max_dev_tensor: float
    passed: bool


def reduction_check(m, k, npoints=100, seed=0, tolerance=1e-10, params=None):
    """Universality under cylinder extension and equator restriction.

    Computes P_k and S_{2,k} on the cylinder g + dtheta^2 at theta = 0,
    restricts, and compares with the base values pointwise.
    """
    pts = random_chart_points(m, npoints, seed)
    base = curvature_batch(m, pts, params)
    ext_field = cylinder_extend(m)
    ext_pts = np.hstack([pts, np.zeros((npoints, 1))])
    ext = curvature_batch(ext_field, ext_pts, params)

    p_base = pfaffian_invariant(base, k)
    p_ext = pfaffian_invariant(ext, k)
    dev_scalar = float(np.abs(p_ext - p_base).max())

    s_base = lovelock_tensor(base, k)
    s_ext = lovelock_tensor(ext, k)
    dev_tensor = 0.0
    for i in range(npoints):
        restricted = restrict_equator(
            PointTensor(m.dim + 1, (LOWER, LOWER), s_ext[i]), m)
        dev_tensor = max(dev_tensor,
                         float(np.abs(restricted.components - s_base[i]).max()))
    passed = dev_scalar <= tolerance and dev_tensor <= tolerance
    return ReductionReport(m.name, k, npoints, dev_scalar, dev_tensor, passed)


def identity_sample_ratios(dim, k, samples, seed, terms=3, kernels=None):
    """Norm ratios ||S_{2,k}|| / ||R|| over seeded random curvature tensors.

    The tensors carry every algebraic curvature symmetry by construction;
    the contraction uses the identity metric (indices already raised).
    """
    rng_master = np.random.default_rng(seed)
    rms = np.empty((samples, dim, dim, dim, dim))
    for s in range(samples):
        child = int(rng_master.integers(0, 2 ** 62))
        rms[s] = tenalg.random_curvature(dim, child, terms).components
    eye = np.broadcast_to(np.eye(dim), (samples, dim, dim)).copy()
    sym, _ = lovelock_components(rms, eye, k, kernels)
    scale = np.abs(rms).max(axis=(1, 2, 3, 4))
    norms = np.abs(sym).max(axis=(1, 2))
    return norms / scale


def bundle_at(m, x, params=None):
    """Convenience wrapper used by the CLI eval task."""
    batch = curvature_batch(m, np.asarray(x, dtype=float)[None, :], params)
    return bundle_from_batch(batch, 0)
