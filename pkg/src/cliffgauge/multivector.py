"""Clifford algebra of coordinate differentials in four dimensions.

Generators ``dx^mu`` obey ``dx^mu dx^nu + dx^nu dx^mu = 2 g^{mu nu}`` where
``g^{mu nu}`` is the inverse metric at a chart point.  Elements are stored
densely on the 16 wedge blades ``dx^A`` (``A`` ascending), ordered by grade
and then lexicographically.  Coefficients may be floats, exact
``Fraction`` objects (object arrays) or :class:`~cliffgauge.dual.Jet`
payloads; small values are never pruned.

The product is defined by the one-form recursion

    a v       = a ^ v + i_{a#} v
    (a ^ A') v = a (A' v) - (i_{a#} A') v

(``a#`` the index-raised one-form).  Running it once over symbolic inverse
metric entries gives structure constants that are polynomials in
``g^{mu nu}``; a context evaluates them at its metric and multiplies by
contraction.
"""
from __future__ import annotations

import itertools
from fractions import Fraction
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

from . import dual
from .dual import Jet

DIM = 4
BLADES: tuple[tuple[int, ...], ...] = tuple(
    c for k in range(DIM + 1) for c in itertools.combinations(range(DIM), k)
)
NBLADES = len(BLADES)
INDEX = {b: i for i, b in enumerate(BLADES)}
GRADES = np.array([len(b) for b in BLADES])


class SignatureError(ValueError):
    pass


def sort_sign(seq: Sequence[int]) -> tuple[int, tuple[int, ...]]:
    """Sign of the permutation sorting ``seq`` and the sorted tuple; sign 0 on repeats."""
    seq = list(seq)
    if len(set(seq)) != len(seq):
        return 0, ()
    sign = 1
    for i in range(len(seq)):
        for j in range(len(seq) - 1 - i):
            if seq[j] > seq[j + 1]:
                seq[j], seq[j + 1] = seq[j + 1], seq[j]
                sign = -sign
    return sign, tuple(seq)


# --- sparse recursion, generic over the coefficient ring --------------------

def _acc(out: dict, blade, coeff):
    if blade in out:
        out[blade] = out[blade] + coeff
    else:
        out[blade] = coeff


def wedge_sparse(u: Mapping, v: Mapping) -> dict:
    out: dict = {}
    for a, ca in u.items():
        for b, cb in v.items():
            s, c = sort_sign(a + b)
            if s:
                _acc(out, c, s * (ca * cb))
    return out


def interior_sparse(w: Sequence, u: Mapping) -> dict:
    """Contraction with the vector ``w`` (index-raised components)."""
    out: dict = {}
    for blade, coeff in u.items():
        for j, idx in enumerate(blade):
            if w[idx] == 0:
                continue
            term = w[idx] * coeff
            _acc(out, blade[:j] + blade[j + 1:], term if j % 2 == 0 else -term)
    return out


def _sum(*parts: Mapping, signs=None) -> dict:
    out: dict = {}
    for k, part in enumerate(parts):
        s = 1 if signs is None else signs[k]
        for blade, coeff in part.items():
            _acc(out, blade, coeff if s == 1 else -coeff)
    return out


def _raised(ginv, mu: int) -> list:
    return [ginv[nu][mu] for nu in range(DIM)]


def _generator_mul(ginv, mu: int, v: Mapping) -> dict:
    return _sum(wedge_sparse({(mu,): 1}, v), interior_sparse(_raised(ginv, mu), v))


def _blade_mul(ginv, blade: tuple[int, ...], v: Mapping) -> dict:
    if not blade:
        return dict(v)
    mu, rest = blade[0], blade[1:]
    first = _generator_mul(ginv, mu, _blade_mul(ginv, rest, v))
    contracted = interior_sparse(_raised(ginv, mu), {rest: 1})
    second = {}
    for b, c in contracted.items():
        for k, val in _blade_mul(ginv, b, v).items():
            _acc(second, k, c * val)
    return _sum(first, second, signs=(1, -1))


def clifford_mul_sparse(ginv, u: Mapping, v: Mapping) -> dict:
    """Clifford product by direct recursion on sparse ``{blade: coeff}`` maps."""
    out: dict = {}
    for a, ca in u.items():
        for k, val in _blade_mul(ginv, a, v).items():
            _acc(out, k, ca * val)
    return out


class Poly:
    """Sparse polynomial with integer coefficients; monomials are sorted symbol tuples."""

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms = {m: c for m, c in (terms or {}).items() if c != 0}

    @classmethod
    def symbol(cls, k: int) -> "Poly":
        return cls({(k,): 1})

    def _coerce(self, other) -> "Poly":
        if isinstance(other, Poly):
            return other
        return Poly({(): other})

    def __add__(self, other):
        out = dict(self.terms)
        for m, c in self._coerce(other).terms.items():
            out[m] = out.get(m, 0) + c
        return Poly(out)

    __radd__ = __add__

    def __neg__(self):
        return Poly({m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __mul__(self, other):
        other = self._coerce(other)
        out: dict = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = tuple(sorted(m1 + m2))
                out[m] = out.get(m, 0) + c1 * c2
        return Poly(out)

    __rmul__ = __mul__

    def __eq__(self, other):
        return self.terms == self._coerce(other).terms

    __hash__ = None


def _sym_index(a: int, b: int) -> int:
    a, b = min(a, b), max(a, b)
    return a * DIM - a * (a - 1) // 2 + (b - a)


@lru_cache(maxsize=None)
def structure_constants() -> tuple[np.ndarray, np.ndarray]:
    """Product table as polynomials in the 10 independent ``g^{mu nu}``.

    Returns ``(monomials, table)``: ``monomials`` is an ``(m, 4)`` array of
    symbol indices padded with 10 (the constant 1), and ``table[m, i, j, k]``
    the integer coefficient of monomial ``m`` in ``(e_i e_j)_k``.
    """
    ginv = [[Poly.symbol(_sym_index(a, b)) for b in range(DIM)] for a in range(DIM)]
    entries = {}
    for i, a in enumerate(BLADES):
        for j, b in enumerate(BLADES):
            for k, poly in _blade_mul(ginv, a, {b: 1}).items():
                if not isinstance(poly, Poly):
                    poly = Poly({(): poly})
                for mono, c in poly.terms.items():
                    entries[mono, i, j, INDEX[k]] = entries.get((mono, i, j, INDEX[k]), 0) + c
    monos = sorted({key[0] for key, c in entries.items() if c != 0}, key=lambda m: (len(m), m))
    mindex = {m: n for n, m in enumerate(monos)}
    table = np.zeros((len(monos), NBLADES, NBLADES, NBLADES), dtype=np.int64)
    for (mono, i, j, k), c in entries.items():
        table[mindex[mono], i, j, k] += c
    padded = np.array([m + (10,) * (DIM - len(m)) for m in monos], dtype=np.intp)
    return padded, table


@lru_cache(maxsize=None)
def _float_table() -> np.ndarray:
    _, table = structure_constants()
    return table.reshape(len(table), -1).astype(float)


def _contract(mono_vals: np.ndarray) -> np.ndarray:
    """``sum_m mono_vals[..., m] table[m]`` as one matrix product."""
    flat = _float_table()
    out = np.asarray(mono_vals, dtype=float) @ flat
    return out.reshape(mono_vals.shape[:-1] + (NBLADES,) * 3)


def _bilinear(table, u, v):
    """``table[..., i, j, k] u[..., i] v[..., j]`` by two matrix products.

    At most one operand carries a leading batch axis (a derivative
    direction); the result has that axis in front.
    """
    n = NBLADES
    m = np.matmul(u[..., None, :], table.reshape(table.shape[:-3] + (n, n * n)))[..., 0, :]
    m = m.reshape(m.shape[:-1] + (n, n))
    return np.matmul(v[..., None, :], m)[..., 0, :]


def _constant_tables():
    wedge = np.zeros((NBLADES, NBLADES, NBLADES), dtype=np.int64)
    for i, a in enumerate(BLADES):
        for j, b in enumerate(BLADES):
            s, c = sort_sign(a + b)
            if s:
                wedge[i, j, INDEX[c]] = s
    interior = np.zeros((DIM, NBLADES, NBLADES), dtype=np.int64)
    for i, a in enumerate(BLADES):
        for pos, idx in enumerate(a):
            interior[idx, i, INDEX[a[:pos] + a[pos + 1:]]] = (-1) ** pos
    # index_action[r, n, A, B]: replacing index n of blade A by r lands on blade B
    action = np.zeros((DIM, DIM, NBLADES, NBLADES), dtype=np.int64)
    for i, a in enumerate(BLADES):
        for pos, n in enumerate(a):
            for r in range(DIM):
                s, c = sort_sign(a[:pos] + (r,) + a[pos + 1:])
                if s:
                    action[r, n, i, INDEX[c]] += s
    return wedge, interior, action


WEDGE_TABLE, INTERIOR_TABLE, INDEX_ACTION = _constant_tables()
REVERSE_SIGNS = np.array([(-1) ** (k * (k - 1) // 2) for k in GRADES])
GRADE_MASKS = np.array([(GRADES == k).astype(np.int64) for k in range(DIM + 1)])


class Multivector:
    """Dense element of the algebra; ``coeffs`` has 16 entries (or a Jet of them)."""

    __slots__ = ("coeffs",)
    __array_ufunc__ = None

    def __init__(self, coeffs):
        if not isinstance(coeffs, Jet):
            coeffs = np.asarray(coeffs)
            if coeffs.dtype != object:
                coeffs = coeffs.astype(float)
        if coeffs.shape != (NBLADES,):
            raise ValueError(f"expected {NBLADES} coefficients, got shape {coeffs.shape}")
        self.coeffs = coeffs

    @classmethod
    def zero(cls) -> "Multivector":
        return cls(np.zeros(NBLADES))

    @classmethod
    def from_dict(cls, terms: Mapping[tuple[int, ...], object]) -> "Multivector":
        exact = any(isinstance(c, Fraction) for c in terms.values())
        coeffs = np.array([Fraction(0)] * NBLADES, dtype=object) if exact else np.zeros(NBLADES)
        for blade, c in terms.items():
            s, key = sort_sign(blade)
            if not s:
                continue
            coeffs[INDEX[key]] += s * c
        return cls(coeffs)

    @classmethod
    def scalar(cls, x) -> "Multivector":
        return cls.from_dict({(): x})

    @classmethod
    def basis(cls, *indices: int) -> "Multivector":
        """``dx^{i1} ^ dx^{i2} ^ ...`` in the given order (sign applied)."""
        return cls.from_dict({tuple(indices): 1.0})

    @classmethod
    def vector(cls, comps) -> "Multivector":
        """One-form ``comps[mu] dx^mu``; ``comps`` may be a Jet."""
        place = np.zeros((DIM, NBLADES))
        for mu in range(DIM):
            place[mu, INDEX[(mu,)]] = 1.0
        return cls(dual.einsum("m,mA->A", comps, place))

    @property
    def is_jet(self) -> bool:
        return isinstance(self.coeffs, Jet)

    def value(self) -> "Multivector":
        return Multivector(dual.value(self.coeffs)) if self.is_jet else self

    def truncate(self, order: int) -> "Multivector":
        return Multivector(dual.truncate(self.coeffs, order))

    def __getitem__(self, blade):
        s, key = sort_sign(blade)
        if not s:
            return 0.0
        c = self.coeffs[INDEX[key]]
        return c if s == 1 else -c

    def terms(self) -> dict:
        v = dual.value(self.coeffs)
        return {b: v[i] for i, b in enumerate(BLADES) if v[i] != 0}

    def __repr__(self):
        if self.is_jet:
            return f"Multivector(<jet order {self.coeffs.order}>)"
        parts = []
        for blade, c in self.terms().items():
            name = "^".join(f"dx{i}" for i in blade)
            parts.append(f"{c}" if not blade else f"{c}*{name}")
        return "Multivector(" + (" + ".join(parts) or "0") + ")"

    def __add__(self, other):
        if not isinstance(other, Multivector):
            return NotImplemented
        return Multivector(self.coeffs + other.coeffs)

    def __sub__(self, other):
        if not isinstance(other, Multivector):
            return NotImplemented
        return Multivector(self.coeffs - other.coeffs)

    def __neg__(self):
        return Multivector(-self.coeffs)

    def __mul__(self, scalar):
        if isinstance(scalar, Multivector):
            raise TypeError("Clifford products need a CliffordContext: use ctx.mul(u, v)")
        return Multivector(self.coeffs * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return Multivector(self.coeffs / scalar)

    def __eq__(self, other):
        if not isinstance(other, Multivector):
            return NotImplemented
        return bool(np.all(dual.value(self.coeffs) == dual.value(other.coeffs)))

    __hash__ = None

    def grade(self, k: int) -> "Multivector":
        if not 0 <= k <= DIM:
            return Multivector(self.coeffs * 0)
        return Multivector(self.coeffs * GRADE_MASKS[k])

    def reverse(self) -> "Multivector":
        return Multivector(self.coeffs * REVERSE_SIGNS)

    def max_abs(self) -> float:
        return dual.max_abs(self.coeffs)

    def approx_eq(self, other: "Multivector", tol: float) -> bool:
        return (self - other).max_abs() <= tol

    def grades(self) -> set[int]:
        return {len(b) for b in self.terms()}


def wedge(u: Multivector, v: Multivector) -> Multivector:
    return Multivector(dual.einsum("ijk,i,j->k", WEDGE_TABLE, u.coeffs, v.coeffs))


def interior(w, u: Multivector) -> Multivector:
    """Contraction ``i_w u`` with vector components ``w^mu``."""
    return Multivector(dual.einsum("n,nab,a->b", w, INTERIOR_TABLE, u.coeffs))


def _exact_inverse(m) -> np.ndarray:
    n = len(m)
    a = [[Fraction(m[i][j]) for j in range(n)] + [Fraction(int(i == j)) for j in range(n)]
         for i in range(n)]
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col] != 0), None)
        if piv is None:
            raise ZeroDivisionError("singular matrix")
        a[col], a[piv] = a[piv], a[col]
        p = a[col][col]
        a[col] = [x / p for x in a[col]]
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return np.array([row[n:] for row in a], dtype=object)


def _inverse(m):
    if isinstance(m, Jet):
        return dual.inv(m)
    m = np.asarray(m)
    if m.dtype == object:
        return _exact_inverse(m)
    return np.linalg.inv(m)


def signature(g) -> tuple[int, int]:
    """(positive, negative) eigenvalue counts of a symmetric matrix."""
    vals = np.linalg.eigvalsh(np.asarray(dual.value(g), dtype=float))
    scale = max(1.0, float(np.max(np.abs(vals))))
    return int(np.sum(vals > 1e-14 * scale)), int(np.sum(vals < -1e-14 * scale))


class CliffordContext:
    """Metric data at one point and the product it induces.

    Build from the metric ``g`` or, with ``ginv=``, from the inverse metric.
    Entries may be floats, Fractions or Jets.
    """

    def __init__(self, g=None, *, ginv=None, check: bool = True):
        if g is None and ginv is None:
            raise ValueError("need g or ginv")
        if g is None:
            g = _inverse(ginv)
        elif ginv is None:
            ginv = _inverse(g)
        if not isinstance(g, Jet):
            g = np.asarray(g)
            ginv = np.asarray(ginv)
        self.g = g
        self.ginv = ginv
        if check:
            self._validate()
        monos, table = structure_constants()
        flat = [ginv[a, b] for a in range(DIM) for b in range(a, DIM)]
        ext = dual.stack(flat + [np.ones_like(dual.value(flat[0]))]) if isinstance(ginv, Jet) \
            else np.array(flat + [1], dtype=ginv.dtype)
        mono_vals = ext[monos[:, 0]] * ext[monos[:, 1]] * ext[monos[:, 2]] * ext[monos[:, 3]]
        if isinstance(mono_vals, Jet):
            # linear in the monomials: contract each Taylor coefficient separately
            parts = [_contract(p) for p in (mono_vals.val, mono_vals.grad, mono_vals.hess)
                     if p is not None]
            self.table = Jet(*parts)
        elif mono_vals.dtype == object:
            self.table = np.einsum("m,mijk->ijk", mono_vals, table)
        else:
            self.table = _contract(mono_vals)

    def _validate(self):
        g = dual.value(self.g)
        ginv = dual.value(self.ginv)
        if g.shape != (DIM, DIM):
            raise ValueError(f"metric must be {DIM}x{DIM}")
        if g.dtype == object:
            if np.any(g != g.T) or np.any(g.dot(ginv) != np.eye(DIM, dtype=int)):
                raise ValueError("metric not symmetric or inverse inconsistent")
        else:
            scale = max(1.0, float(np.max(np.abs(g))) * float(np.max(np.abs(ginv))))
            if np.max(np.abs(g - g.T)) > 1e-12 * max(1.0, float(np.max(np.abs(g)))):
                raise ValueError("metric not symmetric")
            if np.max(np.abs(g @ ginv - np.eye(DIM))) > 1e-12 * scale:
                raise ValueError("inverse metric inconsistent with metric")
        if signature(g) != (1, 3):
            raise SignatureError(f"metric signature {signature(g)} is not (1, 3)")

    def mul(self, *mvs: Multivector) -> Multivector:
        """Left-to-right Clifford product of the arguments."""
        out = mvs[0]
        for v in mvs[1:]:
            out = Multivector(self._product(out.coeffs, v.coeffs))
        return out

    def _product(self, u, v):
        ops = (self.table, u, v)
        if any(isinstance(x, Jet) and x.order > 1 for x in ops) or \
                any(np.asarray(dual.value(x)).dtype == object for x in ops):
            return dual.einsum("ijk,i,j->k", *ops)
        vals = [dual.value(x) for x in ops]
        out = _bilinear(*vals)
        if not any(isinstance(x, Jet) for x in ops):
            return out
        # product rule, one operand differentiated at a time
        grad = 0
        for i, x in enumerate(ops):
            if isinstance(x, Jet):
                args = list(vals)
                args[i] = x.grad
                grad = grad + _bilinear(*args)
        return Jet(out, grad)

    def comm(self, u: Multivector, v: Multivector) -> Multivector:
        return self.mul(u, v) - self.mul(v, u)

    def anticomm(self, u: Multivector, v: Multivector) -> Multivector:
        return self.mul(u, v) + self.mul(v, u)


def clifford_mul(ctx: CliffordContext, u: Multivector, v: Multivector) -> Multivector:
    return ctx.mul(u, v)


def commutator(ctx: CliffordContext, u: Multivector, v: Multivector) -> Multivector:
    return ctx.comm(u, v)


def anticommutator(ctx: CliffordContext, u: Multivector, v: Multivector) -> Multivector:
    return ctx.anticomm(u, v)


def grade_project(u: Multivector, k: int) -> Multivector:
    return u.grade(k)


def reverse(u: Multivector) -> Multivector:
    return u.reverse()


def max_abs_coeff(u: Multivector) -> float:
    return u.max_abs()


def approx_eq(u: Multivector, v: Multivector, tol: float) -> bool:
    return u.approx_eq(v, tol)


# --- orthonormal-frame route ------------------------------------------------

def _det(m) -> object:
    n = len(m)
    if n == 0:
        return 1
    total = 0
    for perm in itertools.permutations(range(n)):
        s, _ = sort_sign(perm)
        term = s
        for i, p in enumerate(perm):
            term = term * m[i][p]
        total = total + term
    return total


def compound(matrix) -> np.ndarray:
    """Exterior powers of ``matrix`` on the blade basis: ``C[A, B] = det(matrix[A, B])``."""
    m = np.asarray(matrix)
    dtype = object if m.dtype == object else float
    out = np.zeros((NBLADES, NBLADES), dtype=dtype)
    if dtype is object:
        out[:] = 0
    for i, a in enumerate(BLADES):
        for j, b in enumerate(BLADES):
            if len(a) == len(b):
                out[i, j] = _det([[m[r, c] for c in b] for r in a])
    return out


def change_frame(tetrad, u: Multivector, direction: str) -> Multivector:
    """Coordinates <-> orthonormal co-frame ``l^a = e^a_mu dx^mu``.

    ``tetrad`` is the matrix ``e[a, mu]`` or an object with an ``e`` attribute.
    """
    e = np.asarray(getattr(tetrad, "e", tetrad))
    if direction == "to-orthonormal":
        einv = _inverse(e)
        if e.dtype != object and not np.all(np.isfinite(einv)):
            raise np.linalg.LinAlgError("singular tetrad")
        # dx^A = sum_B det(einv[A, B]) l^B
        return Multivector(compound(einv).T.dot(u.coeffs))
    if direction == "to-coordinate":
        # l^B = sum_A det(e[B, A]) dx^A
        return Multivector(compound(e).T.dot(u.coeffs))
    raise ValueError(f"unknown direction {direction!r}")


def _ortho_blade_mul(a: tuple, b: tuple, eta: Sequence) -> tuple[object, tuple]:
    """Product of orthonormal blades: sort the concatenation, contract equal pairs."""
    seq = list(a + b)
    sign = 1
    changed = True
    while changed:
        changed = False
        for i in range(len(seq) - 1):
            if seq[i] > seq[i + 1]:
                seq[i], seq[i + 1] = seq[i + 1], seq[i]
                sign = -sign
                changed = True
    factor = sign
    out = []
    i = 0
    while i < len(seq):
        if i + 1 < len(seq) and seq[i] == seq[i + 1]:
            factor = factor * eta[seq[i]]
            i += 2
        else:
            out.append(seq[i])
            i += 1
    return factor, tuple(out)


def orthonormal_mul(u: Multivector, v: Multivector, eta=(1, -1, -1, -1)) -> Multivector:
    """Product in a frame with diagonal Gram matrix ``eta`` (inverse-metric convention)."""
    uc, vc = u.coeffs, v.coeffs
    out = np.zeros(NBLADES, dtype=uc.dtype if uc.dtype == object else float)
    if out.dtype == object:
        out[:] = 0
    for i, a in enumerate(BLADES):
        if uc[i] == 0:
            continue
        for j, b in enumerate(BLADES):
            if vc[j] == 0:
                continue
            f, c = _ortho_blade_mul(a, b, eta)
            out[INDEX[c]] += f * uc[i] * vc[j]
    return Multivector(out)


def frame_route_mul(tetrad, u: Multivector, v: Multivector) -> Multivector:
    """Product via the orthonormal frame: transform, multiply with eta, transform back."""
    uf = change_frame(tetrad, u, "to-orthonormal")
    vf = change_frame(tetrad, v, "to-orthonormal")
    return change_frame(tetrad, orthonormal_mul(uf, vf), "to-coordinate")
