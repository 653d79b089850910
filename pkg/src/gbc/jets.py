"""Second-order forward-mode jets.

A :class:`Jet2` carries the value, gradient and Hessian of a scalar
expression with respect to ``n`` independent variables.  Arithmetic
propagates Taylor data truncated at total order 2, which is exactly the
differentiation depth the curvature tensor needs (second derivatives of
the metric components).

The value channel may be a scalar or an array of shape ``(N,)``; the array
form evaluates the same expression at ``N`` points at once, with ``grad``
of shape ``(N, n)`` and ``hess`` of shape ``(N, n, n)``.  All formulas
broadcast over the leading axis, so a single implementation serves both
the per-point contract and the batched hot path.

The value channel always applies the same floating-point operation as a
plain evaluation would (e.g. division really divides values), so jet and
plain evaluation agree bit for bit on values.
"""

import numpy as np

from .errors import JetDomainError, SingularMetricError

# Divisors smaller than this indicate a degenerate metric quantity rather
# than a meaningful derivative; report instead of propagating infinities.
DIV_GUARD = 1e-300

# Below this magnitude abs() has no usable derivative.
ABS_GUARD = 1e-12


def _col(s):
    """Append one broadcast axis to a scalar-or-(N,) factor."""
    s = np.asarray(s)
    return s[..., None] if s.ndim else s


def _mat(s):
    """Append two broadcast axes to a scalar-or-(N,) factor."""
    s = np.asarray(s)
    return s[..., None, None] if s.ndim else s


def _sym_outer(u, v):
    """u_i v_j + v_i u_j; symmetric bit-for-bit (float addition commutes)."""
    m = np.einsum("...i,...j->...ij", u, v)
    return m + np.swapaxes(m, -1, -2)


class Jet2:
    """Value, gradient and symmetric Hessian with respect to n variables."""

    __slots__ = ("value", "grad", "hess")

    def __init__(self, value, grad, hess):
        self.value = value
        self.grad = np.asarray(grad, dtype=float)
        self.hess = np.asarray(hess, dtype=float)
        n = self.grad.shape[-1]
        if self.hess.shape[-2:] != (n, n):
            raise ValueError(
                f"hessian shape {self.hess.shape} incompatible with gradient "
                f"over {n} variables")

    @property
    def nvars(self):
        return self.grad.shape[-1]

    def _check(self, other):
        if other.nvars != self.nvars:
            raise ValueError(
                f"jet operands differ in variable count: {self.nvars} vs {other.nvars}")

    # -- arithmetic ------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, Jet2):
            self._check(other)
            return Jet2(self.value + other.value, self.grad + other.grad,
                        self.hess + other.hess)
        return Jet2(self.value + other, self.grad, self.hess)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Jet2):
            self._check(other)
            return Jet2(self.value - other.value, self.grad - other.grad,
                        self.hess - other.hess)
        return Jet2(self.value - other, self.grad, self.hess)

    def __rsub__(self, other):
        return Jet2(other - self.value, -self.grad, -self.hess)

    def __neg__(self):
        return Jet2(-self.value, -self.grad, -self.hess)

    def __mul__(self, other):
        if isinstance(other, Jet2):
            self._check(other)
            hess = (_mat(self.value) * other.hess + _mat(other.value) * self.hess
                    + _sym_outer(self.grad, other.grad))
            return Jet2(self.value * other.value,
                        _col(self.value) * other.grad + _col(other.value) * self.grad,
                        hess)
        return Jet2(self.value * other, self.grad * other, self.hess * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet2):
            self._check(other)
            _guard_divisor(other.value)
            q = self.value / other.value
            gq = (self.grad - _col(q) * other.grad) / _col(other.value)
            hq = (self.hess - _mat(q) * other.hess
                  - _sym_outer(gq, other.grad)) / _mat(other.value)
            return Jet2(q, gq, hq)
        _guard_divisor(other)
        return Jet2(self.value / other, self.grad / other, self.hess / other)

    def __rtruediv__(self, other):
        # other is a plain constant: other / self
        _guard_divisor(self.value)
        q = other / self.value
        gq = -_col(q) * self.grad / _col(self.value)
        hq = (-_mat(q) * self.hess - _sym_outer(gq, self.grad)) / _mat(self.value)
        return Jet2(q, gq, hq)

    def __pow__(self, k):
        return pow_const(self, k)

    def __repr__(self):
        return f"Jet2(value={self.value!r}, nvars={self.nvars})"


def _guard_divisor(v):
    bad = np.abs(np.asarray(v)) < DIV_GUARD
    if np.any(bad):
        raise SingularMetricError(
            "division by a vanishing value while evaluating a metric expression")


def jet_var(i, x, n):
    """Seed jet for the i-th of n variables at value(s) x."""
    if not 0 <= i < n:
        raise IndexError(f"variable index {i} out of range for {n} variables")
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        grad = np.zeros(n)
        grad[i] = 1.0
        return Jet2(float(x), grad, np.zeros((n, n)))
    grad = np.zeros(x.shape + (n,))
    grad[..., i] = 1.0
    return Jet2(x, grad, np.zeros(x.shape + (n, n)))


def jet_const(x, n):
    """Constant jet (zero derivatives), scalar or batched."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        return Jet2(float(x), np.zeros(n), np.zeros((n, n)))
    return Jet2(x, np.zeros(x.shape + (n,)), np.zeros(x.shape + (n, n)))


def _chain(a, f0, f1, f2):
    """Order-2 chain rule: f(a) = (f0, f1*grad, f1*H + f2*grad^2)."""
    hess = _mat(f1) * a.hess + _mat(f2) * np.einsum(
        "...i,...j->...ij", a.grad, a.grad)
    return Jet2(f0, _col(f1) * a.grad, hess)


def _domain_check(func, v, bad_mask):
    if np.any(bad_mask):
        v = np.asarray(v)
        if v.ndim == 0:
            raise JetDomainError(func, float(v))
        idx = int(np.argmax(bad_mask))
        raise JetDomainError(func, float(v[idx]), index=idx)


def sin(a):
    if not isinstance(a, Jet2):
        return np.sin(a)
    v = np.sin(a.value)
    return _chain(a, v, np.cos(a.value), -v)


def cos(a):
    if not isinstance(a, Jet2):
        return np.cos(a)
    v = np.cos(a.value)
    return _chain(a, v, -np.sin(a.value), -v)


def exp(a):
    if not isinstance(a, Jet2):
        return np.exp(a)
    v = np.exp(a.value)
    return _chain(a, v, v, v)


def ln(a):
    v = a.value if isinstance(a, Jet2) else a
    _domain_check("ln", v, np.asarray(v) <= 0.0)
    if not isinstance(a, Jet2):
        return np.log(a)
    return _chain(a, np.log(v), 1.0 / np.asarray(v), -1.0 / np.asarray(v) ** 2)


def sqrt(a):
    v = a.value if isinstance(a, Jet2) else a
    _domain_check("sqrt", v, np.asarray(v) <= 0.0)
    if not isinstance(a, Jet2):
        return np.sqrt(a)
    r = np.sqrt(v)
    return _chain(a, r, 0.5 / r, -0.25 / (r * np.asarray(v)))


def tanh(a):
    if not isinstance(a, Jet2):
        return np.tanh(a)
    t = np.tanh(a.value)
    sech2 = 1.0 - t * t
    return _chain(a, t, sech2, -2.0 * t * sech2)


def pow_const(a, k):
    """a**k for a constant real exponent k."""
    if isinstance(k, Jet2):
        raise TypeError("exponent must be a constant, not a jet")
    k = float(k)
    v = a.value if isinstance(a, Jet2) else a
    varr = np.asarray(v)
    integral = k == round(k)
    if not integral:
        _domain_check("pow", v, varr <= 0.0)
    elif k < 0:
        _domain_check("pow", v, np.abs(varr) < DIV_GUARD)
    if not isinstance(a, Jet2):
        return a ** k
    # value channel applies the same power operation a plain evaluation
    # would (numpy and libm pow differ in the last ulp for some inputs)
    f0 = v ** k
    f1 = k * varr ** (k - 1.0) if k != 0 else np.zeros_like(varr)
    f2 = k * (k - 1.0) * varr ** (k - 2.0) if k not in (0.0, 1.0) else np.zeros_like(varr)
    return _chain(a, f0, f1, f2)


def abs_guarded(a):
    """|a|, rejecting evaluation near the kink at zero."""
    v = a.value if isinstance(a, Jet2) else a
    _domain_check("abs", v, np.abs(np.asarray(v)) < ABS_GUARD)
    if not isinstance(a, Jet2):
        return np.abs(a)
    s = np.sign(np.asarray(a.value))
    return Jet2(np.abs(a.value), _col(s) * a.grad, _mat(s) * a.hess)


UNARY_FUNCS = {
    "sin": sin,
    "cos": cos,
    "exp": exp,
    "ln": ln,
    "sqrt": sqrt,
    "tanh": tanh,
    "abs": abs_guarded,
}


def jet_arith(op, a, b=None):
    """Named arithmetic dispatch: add, sub, mul, div, neg."""
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    if op == "neg":
        return -a
    raise ValueError(f"unknown arithmetic op {op!r}")


def jet_transcendental(f, a, k=None):
    """Named transcendental dispatch; k only used by pow_const."""
    if f == "pow_const":
        return pow_const(a, k)
    if f in UNARY_FUNCS:
        return UNARY_FUNCS[f](a)
    raise ValueError(f"unknown transcendental {f!r}")
