"""Truncated bivariate Taylor arithmetic ("jets").

A :class:`Jet2` of order ``N`` holds the scaled Taylor coefficients

    c[m, n] = d^(m+n) f / dx^m dy^n / (m! n!),      m + n <= N,

of a scalar field about a base point. Coefficients are stored in a square
``(N+1, N+1)`` array whose entries with ``m + n > N`` are kept at zero, with
any number of trailing batch axes so a whole grid of base points can be
expanded at once.

Non-finite values are never repaired here. A field that is singular at a
base point produces NaN/inf coefficients which the caller can detect (see
:meth:`Jet2.finite` and :func:`stokes_fdm.fields.sanitize`).
"""
from __future__ import annotations

from math import comb, factorial

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None

__all__ = [
    "Jet2",
    "seed",
    "constant",
    "exp",
    "log",
    "sin",
    "cos",
    "sqrt",
    "power",
    "atan",
    "atan2_branch",
    "DEFAULT_ORDER",
]

DEFAULT_ORDER = 8

_MASKS: dict[int, np.ndarray] = {}
_FACT: dict[int, np.ndarray] = {}


def _mask(order):
    m = _MASKS.get(order)
    if m is None:
        idx = np.arange(order + 1)
        m = (idx[:, None] + idx[None, :]) <= order
        _MASKS[order] = m
    return m


def _fact(order):
    f = _FACT.get(order)
    if f is None:
        v = np.array([float(factorial(k)) for k in range(order + 1)])
        f = np.outer(v, v)
        _FACT[order] = f
    return f


def _expand(mask, ndim):
    return mask.reshape(mask.shape + (1,) * ndim)


def _mul_numpy(a, b, n):
    out = np.zeros(np.broadcast_shapes(a.shape, b.shape))
    with np.errstate(invalid="ignore", over="ignore"):
        for i in range(n + 1):
            for j in range(n + 1 - i):
                out[i:, j:] += a[i, j] * b[: n + 1 - i, : n + 1 - j]
    out *= _expand(_mask(n), out.ndim - 2)
    return out


if numba is not None:

    @numba.njit(cache=True)
    def _mul_kernel(a, b, out, n):  # pragma: no cover - compiled
        npts = a.shape[2]
        for m in range(n + 1):
            for k in range(n + 1 - m):
                for p in range(npts):
                    out[m, k, p] = 0.0
                for i in range(m + 1):
                    for j in range(k + 1):
                        for p in range(npts):
                            out[m, k, p] += a[i, j, p] * b[m - i, k - j, p]


def _mul(a, b, n):
    """Truncated Cauchy product of two coefficient arrays."""
    if numba is None:
        return _mul_numpy(a, b, n)
    shape = np.broadcast_shapes(a.shape, b.shape)
    a3 = np.ascontiguousarray(np.broadcast_to(a, shape)).reshape(n + 1, n + 1, -1)
    b3 = np.ascontiguousarray(np.broadcast_to(b, shape)).reshape(n + 1, n + 1, -1)
    out = np.zeros_like(a3)
    _mul_kernel(a3, b3, out, n)
    return out.reshape(shape)


class Jet2:
    """Truncated Taylor expansion of a scalar field in two variables."""

    __slots__ = ("c", "order")
    __array_priority__ = 100

    def __init__(self, coeffs, order=None):
        c = np.asarray(coeffs, dtype=float)
        if order is None:
            order = c.shape[0] - 1
        if c.shape[0] != order + 1 or c.shape[1] != order + 1:
            raise ValueError(f"coefficient array {c.shape} does not match order {order}")
        self.c = c
        self.order = order

    # -- construction helpers -------------------------------------------------
    @property
    def batch_shape(self):
        return self.c.shape[2:]

    def _like(self, c):
        return Jet2(c, self.order)

    def _coerce(self, other):
        if other.order != self.order:
            raise ValueError(f"jet orders differ: {self.order} vs {other.order}")
        return other

    # -- access -----------------------------------------------------------------
    @property
    def value(self):
        return self.c[0, 0]

    def partial(self, m, n):
        """The derivative d^(m+n) f / dx^m dy^n at the base point."""
        if m + n > self.order:
            raise IndexError(f"partial ({m},{n}) exceeds jet order {self.order}")
        return self.c[m, n] * float(factorial(m) * factorial(n))

    def partials(self):
        """All derivatives as an array of the coefficient shape (zero outside the triangle)."""
        f = _expand(_fact(self.order), len(self.batch_shape))
        return self.c * f

    def finite(self):
        """Per-coefficient finiteness mask, ``True`` outside the triangle."""
        return np.isfinite(self.c)

    def truncate(self, order):
        if order > self.order:
            raise ValueError("cannot raise the order of a jet")
        c = self.c[: order + 1, : order + 1].copy()
        c *= _expand(_mask(order), c.ndim - 2)
        return Jet2(c, order)

    def dx(self):
        """Jet of the x-derivative (order drops by one)."""
        n = self.order
        if n == 0:
            raise ValueError("cannot differentiate an order-0 jet")
        k = np.arange(1, n + 1, dtype=float).reshape((n, 1) + (1,) * len(self.batch_shape))
        return Jet2(self.c[1:, :n] * k, n - 1)

    def dy(self):
        n = self.order
        if n == 0:
            raise ValueError("cannot differentiate an order-0 jet")
        k = np.arange(1, n + 1, dtype=float).reshape((1, n) + (1,) * len(self.batch_shape))
        return Jet2(self.c[:n, 1:] * k, n - 1)

    def diff(self, m, n):
        j = self
        for _ in range(m):
            j = j.dx()
        for _ in range(n):
            j = j.dy()
        return j

    def laplacian(self):
        return self.diff(2, 0) + self.diff(0, 2)

    def take(self, index):
        """Select batch entries (fancy index on the first batch axis)."""
        return Jet2(self.c[:, :, index], self.order)

    # -- arithmetic -------------------------------------------------------------
    def __neg__(self):
        return self._like(-self.c)

    def __pos__(self):
        return self

    def _shift(self, v):
        # add a plain number or batch array to the constant term only
        v = np.asarray(v, dtype=float)
        shape = np.broadcast_shapes(self.batch_shape, v.shape)
        c = np.broadcast_to(self.c, self.c.shape[:2] + shape).copy()
        c[0, 0] += v
        return self._like(c)

    def __add__(self, other):
        if not isinstance(other, Jet2):
            return self._shift(other)
        o = self._coerce(other)
        return self._like(self.c + o.c)

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, Jet2):
            return self._shift(-np.asarray(other, dtype=float))
        o = self._coerce(other)
        return self._like(self.c - o.c)

    def __rsub__(self, other):
        return (-self)._shift(other)

    def __mul__(self, other):
        if not isinstance(other, Jet2):
            return self._like(self.c * np.asarray(other, dtype=float))
        o = self._coerce(other)
        return self._like(_mul(self.c, o.c, self.order))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet2):
            return self._like(self.c / np.asarray(other, dtype=float))
        return self * reciprocal(other)

    def __rtruediv__(self, other):
        return reciprocal(self) * other

    def __pow__(self, r):
        if isinstance(r, (int, np.integer)) and r >= 0:
            out = constant(1.0, self.order, self.batch_shape)
            base = self
            e = int(r)
            while e:
                if e & 1:
                    out = out * base
                e >>= 1
                if e:
                    base = base * base
            return out
        return power(self, r)

    def __repr__(self):
        return f"Jet2(order={self.order}, batch={self.batch_shape}, value={self.value!r})"


def constant(value, order=DEFAULT_ORDER, batch_shape=()):
    """Jet of a constant field."""
    v = np.broadcast_to(np.asarray(value, dtype=float), batch_shape)
    c = np.zeros((order + 1, order + 1) + tuple(batch_shape))
    c[0, 0] = v
    return Jet2(c, order)


def seed(x0, y0, order=DEFAULT_ORDER):
    """Jets of the coordinate fields x and y about ``(x0, y0)``."""
    x0, y0 = np.broadcast_arrays(np.asarray(x0, dtype=float), np.asarray(y0, dtype=float))
    shape = x0.shape
    cx = np.zeros((order + 1, order + 1) + shape)
    cy = np.zeros_like(cx)
    cx[0, 0] = x0
    cy[0, 0] = y0
    if order >= 1:
        cx[1, 0] = 1.0
        cy[0, 1] = 1.0
    return Jet2(cx, order), Jet2(cy, order)


# ---------------------------------------------------------------------------
# univariate composition

def _compose(a: Jet2, taylor):
    """Evaluate sum_k taylor[k] * (a - a0)^k by Horner's rule.

    ``taylor`` holds the univariate Taylor coefficients of the outer function
    at ``a0``, one array (batch shaped) per power, ``len == a.order + 1``.
    """
    n = a.order
    da = a.c.copy()
    da[0, 0] = 0.0
    d = Jet2(da, n)
    out = constant(taylor[n], n, a.batch_shape)
    for k in range(n - 1, -1, -1):
        out = out * d
        out.c[0, 0] = out.c[0, 0] + taylor[k]
    return out


def _errstate():
    return np.errstate(divide="ignore", invalid="ignore", over="ignore")


def exp(a: Jet2) -> Jet2:
    with _errstate():
        e = np.exp(a.value)
        return _compose(a, [e / factorial(k) for k in range(a.order + 1)])


def log(a: Jet2) -> Jet2:
    """Natural logarithm; non-positive base values give non-finite jets."""
    with _errstate():
        a0 = np.where(a.value > 0, a.value, np.nan)
        t = [np.log(a0)]
        for k in range(1, a.order + 1):
            t.append((-1.0) ** (k + 1) / (k * a0 ** k))
        return _compose(a, t)


def sin(a: Jet2) -> Jet2:
    s, c = np.sin(a.value), np.cos(a.value)
    cyc = (s, c, -s, -c)
    return _compose(a, [cyc[k % 4] / factorial(k) for k in range(a.order + 1)])


def cos(a: Jet2) -> Jet2:
    s, c = np.sin(a.value), np.cos(a.value)
    cyc = (c, -s, -c, s)
    return _compose(a, [cyc[k % 4] / factorial(k) for k in range(a.order + 1)])


def _binom(r, k):
    if float(r).is_integer() and r >= 0:
        return float(comb(int(r), k))
    out = 1.0
    for i in range(k):
        out *= (r - i) / (i + 1)
    return out


def power(a: Jet2, r: float) -> Jet2:
    """``a ** r`` for real ``r``; the base must be positive unless r is a whole number."""
    r = float(r)
    if r.is_integer() and r >= 0:
        return a ** int(r)
    with _errstate():
        a0 = np.where(a.value > 0, a.value, np.nan)
        t = [_binom(r, k) * a0 ** (r - k) for k in range(a.order + 1)]
        return _compose(a, t)


def sqrt(a: Jet2) -> Jet2:
    return power(a, 0.5)


def reciprocal(a: Jet2) -> Jet2:
    with _errstate():
        a0 = np.where(a.value != 0, a.value, np.nan)
        t = [(-1.0) ** k / a0 ** (k + 1) for k in range(a.order + 1)]
        return _compose(a, t)


def _atan_taylor(a0, order):
    # derivative of atan is q(t) = 1/(1 + (a0+t)^2); integrate its series
    a0 = np.asarray(a0, dtype=float)
    d = np.zeros((3,) + a0.shape)
    d[0] = 1 + a0 * a0
    d[1] = 2 * a0
    d[2] = 1.0
    q = [1.0 / d[0]]
    for k in range(1, order):
        s = np.zeros_like(a0)
        for i in (1, 2):
            if k - i >= 0:
                s = s + d[i] * q[k - i]
        q.append(-s / d[0])
    return [np.arctan(a0)] + [q[k - 1] / k for k in range(1, order + 1)]


def atan(a: Jet2) -> Jet2:
    return _compose(a, _atan_taylor(a.value, a.order))


def atan2_branch(y: Jet2, x: Jet2, branch_base: float = 2 * np.pi) -> Jet2:
    """Jet of the polar angle of ``(x, y)`` with the constant term in ``[0, branch_base]``.

    The derivative coefficients come from ``atan(y/x)`` where ``|x0| >= |y0|``
    and from ``-atan(x/y)`` elsewhere, so neither quotient blows up. The
    constant term is the angle measured counterclockwise from the positive
    x-axis, which is continuous on any sector ``[0, branch_base]`` with
    ``branch_base <= 2*pi``. The origin yields a non-finite jet.
    """
    x0, y0 = np.broadcast_arrays(x.value, y.value)
    with _errstate():
        use_x = np.abs(x0) >= np.abs(y0)
        t1 = atan(y / x)
        t2 = -atan(x / y)
        c = np.where(use_x, t1.c, t2.c)
        ang = np.mod(np.arctan2(y0, x0), 2 * np.pi)
        # a point exactly on the positive x-axis approached from below belongs to 0
        ang = np.where(ang > branch_base + 1e-12, ang - 2 * np.pi, ang)
        ang = np.where((x0 == 0) & (y0 == 0), np.nan, ang)
        c = c.copy()
        c[0, 0] = ang
        bad = (x0 == 0) & (y0 == 0)
        if np.any(bad):
            c[..., bad] = np.nan
    return Jet2(c, x.order)
