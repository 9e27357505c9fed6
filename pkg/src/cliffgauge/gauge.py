"""Structure fields H, I, K, the connection B and its field strength.

Everything is evaluated locally: a :class:`Site` bundles the geometry at a
chart point together with jets of the metric data, and multivector fields
are represented by their Taylor data there (Jet coefficients).  Applying
``upsilon`` consumes one derivative order, so a second-order field can be
differentiated twice.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Iterator

import numpy as np

from . import dual
from .dual import Jet
from .geometry import (DIM, GeometryAtPoint, MetricSpec, Tetrad, curvature_bivector,
                       geometry_at, tetrad_from_metric)
from .multivector import (BLADES, INDEX_ACTION, NBLADES, CliffordContext, Multivector, wedge)

PAIRS = [(mu, nu) for mu in range(DIM) for nu in range(mu + 1, DIM)]


@dataclass(frozen=True)
class Site:
    """Local data at one chart point.

    ``connection[mu]`` is the 16x16 matrix through which Gamma acts on blade
    coefficients: ``(upsilon_mu u)_A = d_mu u_A - connection[mu, A, B] u_B``.
    """

    spec: MetricSpec
    geo: GeometryAtPoint
    tetrad: Tetrad          # second-order jets
    ctx: CliffordContext    # float

    @property
    def point(self) -> np.ndarray:
        return self.geo.point

    @cached_property
    def ctx_jet(self) -> CliffordContext:
        """Product with first-order jets of ``g^{mu nu}``."""
        g1 = self.geo.g_jet.truncate(1)
        return CliffordContext(g1, ginv=dual.inv(g1), check=False)

    @cached_property
    def connection(self) -> Jet:
        """First-order jet of the blade-space connection matrices."""
        return dual.einsum("rmn,rnAB->mAB", self.geo.gamma_jet, INDEX_ACTION)


def site_at(spec: MetricSpec, point) -> Site:
    geo = geometry_at(spec, point)
    tet = tetrad_from_metric(geo.g_jet)
    ctx = CliffordContext(geo.g, ginv=geo.ginv, check=False)
    return Site(spec, geo, tet, ctx)


@dataclass(frozen=True)
class StructureTriple:
    H: Multivector
    I: Multivector
    K: Multivector

    def __iter__(self) -> Iterator[Multivector]:
        return iter((self.H, self.I, self.K))

    def value(self) -> "StructureTriple":
        return StructureTriple(self.H.value(), self.I.value(), self.K.value())


@dataclass(frozen=True)
class ConnectionField:
    """``B[mu]`` with first-order jets, so ``d_nu B_mu`` is available."""

    B: tuple[Multivector, ...]

    def __getitem__(self, mu: int) -> Multivector:
        return self.B[mu]

    def grade_residual(self) -> float:
        """Largest coefficient of any ``B_mu`` outside grade 2."""
        return max((b.value() - b.value().grade(2)).max_abs() for b in self.B)


def lorentz_from_rotation(rotation) -> np.ndarray:
    """``diag(1, R)`` for a constant 3x3 rotation (a 4x4 input is validated as is)."""
    r = np.asarray(rotation, dtype=float)
    if r.shape == (3, 3):
        lam = np.eye(DIM)
        lam[1:, 1:] = r
    elif r.shape == (DIM, DIM):
        lam = r
    else:
        raise ValueError("rotation must be 3x3 or 4x4")
    eta = np.diag([1.0, -1.0, -1.0, -1.0])
    if np.max(np.abs(lam[0] - np.eye(DIM)[0])) > 1e-12 or np.max(np.abs(lam[:, 0] - np.eye(DIM)[0])) > 1e-12:
        raise ValueError("rotation must leave l^0 fixed")
    if np.max(np.abs(lam.T @ eta @ lam - eta)) > 1e-12:
        raise ValueError("rotation is not orthogonal")
    return lam


def build_HIK(tetrad: Tetrad, rotation=None) -> StructureTriple:
    """H = l^0, I = l^1 l^2, K = l^1 l^3 from the (optionally rotated) co-frame.

    The co-frame vectors are mutually orthogonal, so their Clifford and wedge
    products coincide; the wedge keeps I and K exactly grade 2.
    """
    e = tetrad.e
    if rotation is not None:
        e = dual.einsum("ab,bm->am", lorentz_from_rotation(rotation), e)
    ell = [Multivector.vector(e[a]) for a in range(DIM)]
    return StructureTriple(ell[0], wedge(ell[1], ell[2]), wedge(ell[1], ell[3]))


def upsilon(field: Multivector, site: Site, mu: int) -> Multivector:
    """Levi-Civita derivative of the blade components along coordinate ``mu``.

    The result carries one derivative order less than ``field``.
    """
    c = field.coeffs
    if not isinstance(c, Jet):
        raise TypeError("upsilon needs a field with derivative data (Jet coefficients)")
    order = c.order - 1
    deriv = c.d()[mu]
    conn = dual.truncate(site.connection, order)[mu]
    return Multivector(deriv - dual.einsum("AB,B->A", conn, dual.truncate(c, order)))


def compute_B(triple: StructureTriple, site: Site, mu: int) -> Multivector:
    """``B_mu`` from the compact formula, with first derivatives attached."""
    m = site.ctx_jet.mul
    H, I, K = (x.truncate(1) for x in triple)
    uH, uI, uK = (upsilon(x, site, mu) for x in triple)
    paired = m(I, uI) + m(K, uK)
    return (m(H, uH) * (-3 / 8)
            + paired * (1 / 4)
            + m(H, paired, H) * (1 / 8)
            - m(I, K, H, uH, K, I) * (1 / 8)
            - (m(K, I, uI, K) + m(I, K, uK, I)) * (1 / 8))


def connection_field(triple: StructureTriple, site: Site) -> ConnectionField:
    return ConnectionField(tuple(compute_B(triple, site, mu) for mu in range(DIM)))


def covariant_D(B: ConnectionField, field: Multivector, site: Site, mu: int) -> Multivector:
    """``D_mu U = upsilon_mu U - [B_mu, U]`` (values only)."""
    return upsilon(field, site, mu).value() - site.ctx.comm(B[mu].value(), field.value())


def nabla_B(B: ConnectionField, site: Site, mu: int, nu: int) -> Multivector:
    """``upsilon_mu`` of ``B_nu`` including the Christoffel term on the index ``nu``."""
    out = upsilon(B[nu], site, mu).value()
    for rho in range(DIM):
        out = out - B[rho].value() * site.geo.gamma[rho, mu, nu]
    return out


def field_strength(B: ConnectionField, site: Site, mu: int, nu: int) -> Multivector:
    """``D_mu B_nu - D_nu B_mu + [B_mu, B_nu]``."""
    bm, bn = B[mu].value(), B[nu].value()
    comm = site.ctx.comm(bm, bn)
    d_mn = nabla_B(B, site, mu, nu) - comm
    d_nm = nabla_B(B, site, nu, mu) - site.ctx.comm(bn, bm)
    return d_mn - d_nm + comm


def half_curvature(site: Site, mu: int, nu: int) -> Multivector:
    return curvature_bivector(site.geo, mu, nu) * 0.5


def eq3_residuals(triple: StructureTriple, ctx: CliffordContext) -> dict[str, float]:
    H, I, K = triple.value()
    one = Multivector.scalar(1.0)
    return {
        "H2": (ctx.mul(H, H) - one).max_abs(),
        "I2": (ctx.mul(I, I) + one).max_abs(),
        "K2": (ctx.mul(K, K) + one).max_abs(),
        "HI": ctx.comm(H, I).max_abs(),
        "HK": ctx.comm(H, K).max_abs(),
        "IK": ctx.anticomm(I, K).max_abs(),
    }


PROOF_RELATIONS = ("{uH,H}", "{uI,I}", "{uK,K}", "{uK,I}+{uI,K}", "[uH,I]-[uI,H]", "[uH,K]-[uK,H]")


def check_proof_relations(triple: StructureTriple, site: Site, mu: int) -> dict[str, float]:
    ctx = site.ctx
    H, I, K = triple.value()
    uH, uI, uK = (upsilon(x, site, mu).value() for x in triple)
    values = (
        ctx.anticomm(uH, H),
        ctx.anticomm(uI, I),
        ctx.anticomm(uK, K),
        ctx.anticomm(uK, I) + ctx.anticomm(uI, K),
        ctx.comm(uH, I) - ctx.comm(uI, H),
        ctx.comm(uH, K) - ctx.comm(uK, H),
    )
    return {name: v.max_abs() for name, v in zip(PROOF_RELATIONS, values)}


def polynomial_field(values, grads, hessians) -> Multivector:
    """Field with quadratic coordinate dependence around the site.

    ``values`` (16,), ``grads`` (4, 16), ``hessians`` (4, 4, 16); the Hessian
    is symmetrised.
    """
    h = np.asarray(hessians, dtype=float)
    h = 0.5 * (h + np.swapaxes(h, 0, 1))
    return Multivector(Jet(np.asarray(values, float), np.asarray(grads, float), h))


def curvature_commutator(site: Site, field: Multivector, mu: int, nu: int):
    """``([C_{mu nu}/2, U], upsilon_mu upsilon_nu U - upsilon_nu upsilon_mu U)``."""
    lhs = site.ctx.comm(half_curvature(site, mu, nu), field.value())
    rhs = (upsilon(upsilon(field, site, nu), site, mu)
           - upsilon(upsilon(field, site, mu), site, nu))
    return lhs, rhs


def tetrad_product_field(site: Site, coeffs) -> Multivector:
    """``sum_k c_k l^{A_k}`` over the 16 co-frame blades, with second-order jets."""
    ell = [Multivector.vector(site.tetrad.e[a]) for a in range(DIM)]
    one = Multivector(Jet(np.eye(NBLADES)[0], np.zeros((DIM, NBLADES)),
                          np.zeros((DIM, DIM, NBLADES))))
    total = None
    for c, blade in zip(coeffs, BLADES):
        term = one
        for a in blade:
            term = wedge(term, ell[a])
        term = term * float(c)
        total = term if total is None else total + term
    return total


def plane_rotation(i: int, j: int, angle: float) -> np.ndarray:
    """Rotation by ``angle`` in the (l^i, l^j) plane, ``1 <= i, j <= 3``."""
    lam = np.eye(DIM)
    c, s = math.cos(angle), math.sin(angle)
    lam[i, i] = lam[j, j] = c
    lam[i, j], lam[j, i] = -s, s
    return lam


def random_rotation(uniform: Callable[[], float]) -> np.ndarray:
    """Uniformly distributed 3x3 rotation from three uniforms (unit quaternion)."""
    u1, u2, u3 = uniform(), uniform(), uniform()
    a, b = math.sqrt(1 - u1), math.sqrt(u1)
    w, x, y, z = (a * math.sin(2 * math.pi * u2), a * math.cos(2 * math.pi * u2),
                  b * math.sin(2 * math.pi * u3), b * math.cos(2 * math.pi * u3))
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
        [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
        [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
    ])
