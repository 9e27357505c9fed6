"""Forward-mode differentiation primitives.

Two number types live here:

``Dual2``
    hyper-dual number ``a + b e1 + c e2 + d e1e2`` with ``e1**2 = e2**2 = 0``.
    Evaluating a function at ``x + e1 u + e2 v`` yields the value, the two
    directional derivatives along ``u`` and ``v`` and the mixed second
    derivative, all exact.  Payloads may be floats or numpy arrays, so one
    evaluation can carry several direction pairs at once.

``Jet``
    truncated multivariate Taylor expansion (order 1 or 2) over ``n``
    coordinate directions with array payloads.  It is the work-horse of the
    per-point pipeline: a Jet with ``val.shape == S`` stores ``grad`` with
    shape ``(n,) + S`` and, at order 2, ``hess`` with shape ``(n, n) + S``.
"""
from __future__ import annotations

import math
import string

import numpy as np


class Dual2:
    """Second-order (hyper-)dual number."""

    __slots__ = ("re", "e1", "e2", "e12")

    def __init__(self, re, e1=0.0, e2=0.0, e12=0.0):
        self.re = re
        self.e1 = e1
        self.e2 = e2
        self.e12 = e12

    def __repr__(self):
        return f"Dual2({self.re!r}, {self.e1!r}, {self.e2!r}, {self.e12!r})"

    # chain rule for f(a) with f', f'' evaluated at the real part
    def _apply(self, f0, f1, f2):
        return Dual2(
            f0,
            f1 * self.e1,
            f1 * self.e2,
            f1 * self.e12 + f2 * self.e1 * self.e2,
        )

    def __add__(self, other):
        if isinstance(other, Dual2):
            return Dual2(self.re + other.re, self.e1 + other.e1,
                         self.e2 + other.e2, self.e12 + other.e12)
        return Dual2(self.re + other, self.e1, self.e2, self.e12)

    __radd__ = __add__

    def __neg__(self):
        return Dual2(-self.re, -self.e1, -self.e2, -self.e12)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Dual2):
            return Dual2(
                self.re * other.re,
                self.re * other.e1 + self.e1 * other.re,
                self.re * other.e2 + self.e2 * other.re,
                self.re * other.e12 + self.e1 * other.e2
                + self.e2 * other.e1 + self.e12 * other.re,
            )
        return Dual2(self.re * other, self.e1 * other, self.e2 * other, self.e12 * other)

    __rmul__ = __mul__

    def reciprocal(self):
        r = 1.0 / self.re
        return self._apply(r, -r * r, 2.0 * r * r * r)

    def __truediv__(self, other):
        if isinstance(other, Dual2):
            return self * other.reciprocal()
        return self * (1.0 / other)

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def ipow(self, n: int):
        """Integer power by repeated squaring."""
        if n < 0:
            return self.ipow(-n).reciprocal()
        result = Dual2(np.ones_like(self.re) if isinstance(self.re, np.ndarray) else 1.0)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def sin(self):
        s, c = np.sin(self.re), np.cos(self.re)
        return self._apply(s, c, -s)

    def cos(self):
        s, c = np.sin(self.re), np.cos(self.re)
        return self._apply(c, -s, -c)

    def tan(self):
        t = np.tan(self.re)
        sec2 = 1.0 + t * t
        return self._apply(t, sec2, 2.0 * t * sec2)

    def exp(self):
        e = np.exp(self.re)
        return self._apply(e, e, e)

    def log(self):
        r = 1.0 / self.re
        return self._apply(np.log(self.re), r, -r * r)

    def sqrt(self):
        s = np.sqrt(self.re)
        return self._apply(s, 0.5 / s, -0.25 / (s * self.re))

    def sinh(self):
        s, c = np.sinh(self.re), np.cosh(self.re)
        return self._apply(s, c, s)

    def cosh(self):
        s, c = np.sinh(self.re), np.cosh(self.re)
        return self._apply(c, s, c)

    def tanh(self):
        t = np.tanh(self.re)
        sech2 = 1.0 - t * t
        return self._apply(t, sech2, -2.0 * t * sech2)


def _lift(x: "Jet", shape):
    """Payloads of ``x`` broadcast to value shape ``shape``."""
    n = x.nvars
    pad = (1,) * (len(shape) - x.val.ndim)
    val = np.broadcast_to(x.val, shape)
    grad = np.broadcast_to(x.grad.reshape((n,) + pad + x.val.shape), (n,) + shape)
    hess = None
    if x.hess is not None:
        hess = np.broadcast_to(x.hess.reshape((n, n) + pad + x.val.shape), (n, n) + shape)
    return val, grad, hess


class Jet:
    """Truncated Taylor expansion with array payloads.

    Non-Jet operands (floats, ndarrays) are treated as constants.  Combining
    jets of different order truncates to the lower one.
    """

    __slots__ = ("val", "grad", "hess")
    # keep numpy from turning ``ndarray + Jet`` into an object array
    __array_ufunc__ = None

    def __init__(self, val, grad, hess=None):
        self.val = np.asarray(val)
        self.grad = np.asarray(grad)
        self.hess = None if hess is None else np.asarray(hess)

    @classmethod
    def variables(cls, point, order: int = 2) -> "Jet":
        """Coordinates ``x`` seeded as independent variables at ``point``."""
        point = np.asarray(point, dtype=float)
        n = point.shape[0]
        hess = np.zeros((n, n, n)) if order == 2 else None
        return cls(point.copy(), np.eye(n), hess)

    @property
    def order(self) -> int:
        return 1 if self.hess is None else 2

    @property
    def nvars(self) -> int:
        return self.grad.shape[0]

    @property
    def shape(self):
        return self.val.shape

    def __repr__(self):
        return f"Jet(order={self.order}, shape={self.shape})"

    def truncate(self, order: int):
        if order <= 0:
            return self.val
        if order >= self.order:
            return self
        return Jet(self.val, self.grad)

    def d(self):
        """All first partials, one order lower; the new leading axis is the direction."""
        if self.hess is None:
            return self.grad
        return Jet(self.grad, self.hess)

    def __getitem__(self, key):
        if not isinstance(key, tuple):
            key = (key,)
        grad = self.grad[(slice(None),) + key]
        hess = None if self.hess is None else self.hess[(slice(None), slice(None)) + key]
        return Jet(self.val[key], grad, hess)

    def __neg__(self):
        return Jet(-self.val, -self.grad, None if self.hess is None else -self.hess)

    def __add__(self, other):
        if not isinstance(other, Jet):
            shape = np.broadcast_shapes(self.shape, np.shape(other))
            _, grad, hess = _lift(self, shape)
            return Jet(self.val + other, grad, hess)
        shape = np.broadcast_shapes(self.shape, other.shape)
        av, ag, ah = _lift(self, shape)
        bv, bg, bh = _lift(other, shape)
        hess = ah + bh if min(self.order, other.order) == 2 else None
        return Jet(av + bv, ag + bg, hess)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet):
            shape = np.broadcast_shapes(self.shape, np.shape(other))
            av, ag, ah = _lift(self, shape)
            return Jet(av * other, ag * other, None if ah is None else ah * other)
        shape = np.broadcast_shapes(self.shape, other.shape)
        av, ag, ah = _lift(self, shape)
        bv, bg, bh = _lift(other, shape)
        val = av * bv
        grad = av * bg + ag * bv
        if min(self.order, other.order) == 1:
            return Jet(val, grad)
        cross = ag[:, None] * bg[None, :]
        hess = av * bh + ah * bv + cross + np.swapaxes(cross, 0, 1)
        return Jet(val, grad, hess)

    __rmul__ = __mul__

    def _apply(self, f0, f1, f2):
        grad = f1 * self.grad
        if self.hess is None:
            return Jet(f0, grad)
        hess = f1 * self.hess + f2 * self.grad[:, None] * self.grad[None, :]
        return Jet(f0, grad, hess)

    def reciprocal(self):
        r = 1.0 / self.val
        return self._apply(r, -r * r, 2.0 * r * r * r)

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        return self * (1.0 / other)

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def sqrt(self):
        s = np.sqrt(self.val)
        return self._apply(s, 0.5 / s, -0.25 / (s * self.val))


def value(x):
    """Plain value of a Jet, or ``x`` itself."""
    return x.val if isinstance(x, Jet) else x


def truncate(x, order: int):
    return x.truncate(order) if isinstance(x, Jet) else x


def sqrt(x):
    if isinstance(x, Jet):
        return x.sqrt()
    return np.sqrt(x)


def _free_letters(subscripts: str, k: int) -> str:
    unused = [c for c in string.ascii_letters if c not in subscripts]
    return "".join(unused[:k])


def einsum(subscripts: str, *operands):
    """``np.einsum`` with the product rule applied to Jet operands.

    ``subscripts`` must spell out the output with ``->``.
    """
    vals = [value(op) for op in operands]
    out = np.einsum(subscripts, *vals)
    jets = [i for i, op in enumerate(operands) if isinstance(op, Jet)]
    if not jets:
        return out
    order = min(operands[i].order for i in jets)
    lhs, rhs = subscripts.split("->")
    terms = lhs.split(",")
    y, z = _free_letters(subscripts, 2)

    def contract(replaced, letters_out):
        spec = ",".join(replaced.get(k, (t, None))[0] for k, t in enumerate(terms))
        args = [replaced.get(k, (None, vals[k]))[1] for k in range(len(terms))]
        return np.einsum(spec + "->" + letters_out + rhs, *args)

    grad = sum(contract({i: (z + terms[i], operands[i].grad)}, z) for i in jets)
    if order == 1:
        return Jet(out, grad)
    hess = sum(contract({i: (y + z + terms[i], operands[i].hess)}, y + z) for i in jets)
    for i in jets:
        for j in jets:
            if i != j:
                hess = hess + contract(
                    {i: (y + terms[i], operands[i].grad), j: (z + terms[j], operands[j].grad)},
                    y + z,
                )
    return Jet(out, grad, hess)


def inv(a):
    """Matrix inverse, differentiated through for Jets."""
    if not isinstance(a, Jet):
        return np.linalg.inv(a)
    x = np.linalg.inv(a.val)
    # d(A^-1) = -A^-1 dA A^-1
    xg = -np.einsum("ij,zjk,kl->zil", x, a.grad, x)
    if a.hess is None:
        return Jet(x, xg)
    t = np.einsum("ij,zjk,kl,ylm,mn->yzin", x, a.grad, x, a.grad, x)
    xh = t + np.swapaxes(t, 0, 1) - np.einsum("ij,yzjk,kl->yzil", x, a.hess, x)
    return Jet(x, xg, xh)


def stack(items, axis: int = 0):
    """``np.stack`` for a list mixing Jets and arrays (same jet order assumed)."""
    jets = [it for it in items if isinstance(it, Jet)]
    if not jets:
        return np.stack(items, axis=axis)
    n = jets[0].nvars
    order = min(j.order for j in jets)
    shape = np.shape(value(items[0]))
    lifted = [it if isinstance(it, Jet) else
              Jet(it, np.zeros((n,) + shape), np.zeros((n, n) + shape) if order == 2 else None)
              for it in items]
    val = np.stack([j.val for j in lifted], axis=axis)
    grad = np.stack([j.grad for j in lifted], axis=axis + 1)
    if order == 1:
        return Jet(val, grad)
    hess = np.stack([j.hess for j in lifted], axis=axis + 2)
    return Jet(val, grad, hess)


def max_abs(x) -> float:
    v = np.asarray(value(x))
    if v.size == 0:
        return 0.0
    if v.dtype == object:
        return float(max(abs(e) for e in v.flat))
    return float(np.max(np.abs(v)))


def is_integral(x) -> bool:
    return isinstance(x, (int, float)) and math.isfinite(x) and float(x).is_integer()
