"""Dense point-tensor algebra.

Covers the index machinery behind the curvature invariants: generalized
Kronecker deltas (exact integer determinants), index raising/lowering,
general pairwise contractions, Kulkarni-Nomizu products, and seeded random
algebraic curvature tensors.

Contraction plans enumerate the nonzero terms of a generalized-delta
contraction once per (dimension, order) pair; the hot kernels replay them
as flat index arrays.
"""

import itertools
from dataclasses import dataclass
from functools import lru_cache
from string import ascii_letters

import numpy as np

from .errors import ContractionPlanError, SingularMetricError

UPPER = "upper"
LOWER = "lower"


@dataclass(frozen=True)
class PointTensor:
    """Dense real components of a tensor at a single point.

    variance lists one of "upper"/"lower" per slot; components has shape
    (dim,) * rank.  Instances are immutable: the component array is frozen.
    """

    dim: int
    variance: tuple
    components: np.ndarray
    tag: str | None = None

    def __post_init__(self):
        # np.ascontiguousarray would promote rank-0 components to shape (1,)
        comps = np.array(self.components, dtype=float, order="C")
        expected = (self.dim,) * len(self.variance)
        if comps.shape != expected:
            raise ValueError(
                f"components shape {comps.shape} does not match "
                f"dim {self.dim} and rank {len(self.variance)}")
        comps.flags.writeable = False
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "variance", tuple(self.variance))

    @property
    def rank(self):
        return len(self.variance)


def _parity(perm):
    """Sign of a permutation given as a tuple of ints."""
    sign = 1
    seen = [False] * len(perm)
    for start in range(len(perm)):
        if seen[start]:
            continue
        length = 0
        j = start
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def _bareiss_det(m):
    """Exact determinant of a small integer matrix (fraction-free Bareiss)."""
    a = [list(map(int, row)) for row in m]
    n = len(a)
    if n == 0:
        return 1
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for r in range(k + 1, n):
                if a[r][k] != 0:
                    a[k], a[r] = a[r], a[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[-1][-1]


def gen_delta(upper, lower, n):
    """Generalized Kronecker delta via an exact 0/1 determinant.

    Equal-length index tuples; exactly zero whenever the tuples are not
    permutations of a common set of distinct values (in particular for any
    m > n evaluation, by pigeonhole).
    """
    upper = tuple(upper)
    lower = tuple(lower)
    if len(upper) != len(lower):
        raise ValueError("upper and lower index tuples must have equal length")
    assert all(0 <= i < n for i in upper + lower), "index outside [0, n)"
    m = [[1 if u == l else 0 for l in lower] for u in upper]
    return float(_bareiss_det(m))


def gen_delta_permsum(upper, lower, n):
    """Brute-force oracle: explicit signed sum over permutations."""
    upper = tuple(upper)
    lower = tuple(lower)
    if len(upper) != len(lower):
        raise ValueError("upper and lower index tuples must have equal length")
    assert all(0 <= i < n for i in upper + lower), "index outside [0, n)"
    m = len(upper)
    total = 0
    for perm in itertools.permutations(range(m)):
        term = _parity(perm)
        for i in range(m):
            if upper[i] != lower[perm[i]]:
                term = 0
                break
        total += term
    return float(total)


@lru_cache(maxsize=None)
def dense_delta(n, m):
    """Dense generalized delta, shape (n,)*2m, built by permutation scatter.

    Index order: m upper slots then m lower slots.  Used by the brute-force
    contraction oracle; the production engine never materializes it.
    """
    out = np.zeros((n,) * (2 * m))
    for lower in itertools.product(range(n), repeat=m):
        for perm in itertools.permutations(range(m)):
            upper = tuple(lower[perm[i]] for i in range(m))
            out[upper + lower] += _parity(perm)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class RawPlan:
    """Nonzero terms of the 2k-index delta contraction behind raw_k."""

    n: int
    k: int
    b: np.ndarray      # (T, 2k) lower delta indices (upper on R)
    c: np.ndarray      # (T, 2k) upper delta indices (lower on R)
    sign: np.ndarray   # (T,)


@dataclass(frozen=True)
class LovelockPlan:
    """Nonzero terms of the (2k+1)-index delta contraction behind S_{2,k}."""

    n: int
    k: int
    b: np.ndarray      # (T, 2k)
    c: np.ndarray      # (T, 2k)
    j: np.ndarray      # (T,) extra upper slot
    i1: np.ndarray     # (T,) extra lower slot (free tensor index)
    sign: np.ndarray   # (T,)


def _delta_terms(n, m):
    """All (lower tuple, upper tuple, sign) with distinct lower values."""
    for tup in itertools.permutations(range(n), m):
        for perm in itertools.permutations(range(m)):
            upper = tuple(tup[perm[i]] for i in range(m))
            yield tup, upper, _parity(perm)


@lru_cache(maxsize=None)
def raw_plan(n, k):
    m = 2 * k
    rows_b, rows_c, signs = [], [], []
    for low, up, sign in _delta_terms(n, m):
        rows_b.append(low)
        rows_c.append(up)
        signs.append(float(sign))
    shape = (len(rows_b), m)
    return RawPlan(n, k,
                   np.array(rows_b, dtype=np.int64).reshape(shape),
                   np.array(rows_c, dtype=np.int64).reshape(shape),
                   np.array(signs))


@lru_cache(maxsize=None)
def lovelock_plan(n, k):
    m = 2 * k + 1
    rows_b, rows_c, rows_j, rows_i1, signs = [], [], [], [], []
    if m <= n:
        for low, up, sign in _delta_terms(n, m):
            rows_b.append(low[:2 * k])
            rows_i1.append(low[2 * k])
            rows_c.append(up[:2 * k])
            rows_j.append(up[2 * k])
            signs.append(float(sign))
    shape = (len(rows_b), 2 * k)
    return LovelockPlan(n, k,
                        np.array(rows_b, dtype=np.int64).reshape(shape),
                        np.array(rows_c, dtype=np.int64).reshape(shape),
                        np.array(rows_j, dtype=np.int64),
                        np.array(rows_i1, dtype=np.int64),
                        np.array(signs))


def _det_scale(g):
    return max(1.0, float(np.abs(g).max()) ** g.shape[0])


def raise_lower(t, slot, metric, inverse):
    """Flip the variance of one slot by contracting with g or its inverse."""
    if not 0 <= slot < t.rank:
        raise ValueError(f"slot {slot} out of range for rank {t.rank}")
    g = metric.components
    det = np.linalg.det(g)
    if abs(det) < 1e-12 * _det_scale(g):
        raise SingularMetricError("metric too close to degenerate for "
                                  "index raising/lowering", det=float(det))
    if t.variance[slot] == UPPER:
        mat, new = g, LOWER
    else:
        mat, new = inverse.components, UPPER
    moved = np.moveaxis(t.components, slot, 0)
    out = np.moveaxis(np.tensordot(mat, moved, axes=([1], [0])), 0, slot)
    variance = t.variance[:slot] + (new,) + t.variance[slot + 1:]
    return PointTensor(t.dim, variance, out, t.tag)


def contract_product(factors, pairing, dim=None):
    """Contract a product of tensors over the given slot pairs.

    pairing entries are ((factor_index, slot), (factor_index, slot)); paired
    slots must have opposite variance and equal dimension.  Unpaired slots
    keep their declaration order.  An empty factor list yields the scalar 1
    (empty product convention).
    """
    if not factors:
        return PointTensor(dim if dim else 1, (), np.array(1.0))
    dims = {f.dim for f in factors}
    if len(dims) != 1:
        raise ContractionPlanError(f"mixed dimensions in contraction: {dims}")
    letters = iter(ascii_letters)
    slot_letter = {}
    for side_a, side_b in pairing:
        for (fi, si) in (side_a, side_b):
            if not (0 <= fi < len(factors) and 0 <= si < factors[fi].rank):
                raise ContractionPlanError(f"pairing refers to missing slot {(fi, si)}")
            if (fi, si) in slot_letter:
                raise ContractionPlanError(f"slot {(fi, si)} paired twice")
        (ai, asl), (bi, bsl) = side_a, side_b
        va = factors[ai].variance[asl]
        vb = factors[bi].variance[bsl]
        if va == vb:
            raise ContractionPlanError(
                f"paired slots {side_a} and {side_b} have equal variance {va}")
        letter = next(letters)
        slot_letter[side_a] = letter
        slot_letter[side_b] = letter
    inputs = []
    out_letters = []
    out_variance = []
    for fi, f in enumerate(factors):
        sub = []
        for si in range(f.rank):
            if (fi, si) in slot_letter:
                sub.append(slot_letter[(fi, si)])
            else:
                letter = next(letters)
                sub.append(letter)
                out_letters.append(letter)
                out_variance.append(f.variance[si])
        inputs.append("".join(sub))
    spec = ",".join(inputs) + "->" + "".join(out_letters)
    comps = np.einsum(spec, *[f.components for f in factors], optimize=True)
    return PointTensor(factors[0].dim, tuple(out_variance), comps)


def _require_symmetric(name, a, tol=1e-12):
    arr = np.asarray(a, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be a square matrix")
    scale = max(1.0, np.abs(arr).max())
    if np.abs(arr - arr.T).max() > tol * scale:
        raise ValueError(f"{name} is not symmetric to {tol}")
    return arr


def kulkarni_nomizu(a, b):
    """Kulkarni-Nomizu product of two symmetric 2-tensors.

    (a ^ b)_{ijkl} = a_ik b_jl + a_jl b_ik - a_il b_jk - a_jk b_il; the
    result carries every algebraic curvature symmetry by construction.
    """
    A = _require_symmetric("first factor", a.components if isinstance(a, PointTensor) else a)
    B = _require_symmetric("second factor", b.components if isinstance(b, PointTensor) else b)
    if A.shape != B.shape:
        raise ValueError("factors must share a dimension")
    comps = (np.einsum("ik,jl->ijkl", A, B) + np.einsum("jl,ik->ijkl", A, B)
             - np.einsum("il,jk->ijkl", A, B) - np.einsum("jk,il->ijkl", A, B))
    n = A.shape[0]
    return PointTensor(n, (LOWER,) * 4, comps, tag="algebraic curvature")


def random_curvature(dim, seed, terms):
    """Sum of Kulkarni-Nomizu squares of seeded random symmetric matrices."""
    if terms < 1:
        raise ValueError("need at least one Kulkarni-Nomizu term")
    rng = np.random.default_rng(seed)
    total = np.zeros((dim,) * 4)
    for _ in range(terms):
        raw = rng.uniform(-1.0, 1.0, (dim, dim))
        sym = (raw + raw.T) / 2.0
        total = total + kulkarni_nomizu(sym, sym).components
    return PointTensor(dim, (LOWER,) * 4, total, tag="algebraic curvature")


def curvature_symmetry_residuals(t):
    """Max-norm residuals of the algebraic curvature symmetries.

    Returns dict with antisym_01, antisym_23, pair_swap and bianchi entries,
    each normalized by the max absolute component.
    """
    c = t.components if isinstance(t, PointTensor) else np.asarray(t)
    scale = max(np.abs(c).max(), 1e-300)
    return {
        "antisym_01": np.abs(c + c.transpose(1, 0, 2, 3)).max() / scale,
        "antisym_23": np.abs(c + c.transpose(0, 1, 3, 2)).max() / scale,
        "pair_swap": np.abs(c - c.transpose(2, 3, 0, 1)).max() / scale,
        "bianchi": np.abs(c + np.transpose(c, (0, 2, 3, 1))
                          + np.transpose(c, (0, 3, 1, 2))).max() / scale,
    }
