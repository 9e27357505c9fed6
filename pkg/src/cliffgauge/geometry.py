"""Metric specifications and the local Levi-Civita geometry they induce.

Conventions: signature (+,-,-,-);
``Gamma^l_{mn} = 1/2 g^{lr} (d_m g_{rn} + d_n g_{rm} - d_r g_{mn})`` and
``R^r_{smn} = d_m Gamma^r_{ns} - d_n Gamma^r_{ms} + Gamma^r_{ml} Gamma^l_{ns}
- Gamma^r_{nl} Gamma^l_{ms}``.
Metric derivatives come from hyper-dual evaluation of the component
expressions, so ``Gamma`` and its first derivatives are exact to rounding.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import dual
from .dual import Dual2, Jet
from .expr import Expr, evaluate, parse, pretty
from .multivector import DIM, INDEX, Multivector, SignatureError, signature

ETA = np.diag([1.0, -1.0, -1.0, -1.0])
_PAIRS = [(a, b) for a in range(DIM) for b in range(a, DIM)]


class DomainError(ValueError):
    pass


class SingularMetricError(ValueError):
    pass


class PivotBreakdown(ValueError):
    def __init__(self, pivot: int, message: str = ""):
        self.pivot = pivot
        super().__init__(message or f"tetrad pivot breakdown at frame index {pivot}")


@dataclass(frozen=True)
class MetricSpec:
    """A chart: four coordinates, the lower triangle of ``g`` and a sampling box.

    ``domain`` holds one open interval per coordinate with singularity margins
    already applied; points outside it are rejected.
    """

    name: str
    coords: tuple[str, ...]
    components: Mapping[tuple[int, int], Expr]
    domain: tuple[tuple[float, float], ...]
    params: Mapping[str, float] = field(default_factory=dict)
    notes: str = ""

    def __post_init__(self):
        if len(self.coords) != DIM or len(set(self.coords)) != DIM:
            raise ValueError(f"need {DIM} distinct coordinate names, got {self.coords}")
        if len(self.domain) != DIM:
            raise ValueError("need one domain interval per coordinate")
        for (i, j) in self.components:
            if not 0 <= i <= j < DIM:
                raise ValueError(f"component index ({i}, {j}) must satisfy 0 <= i <= j < {DIM}")
        for lo, hi in self.domain:
            if not lo < hi:
                raise ValueError(f"empty domain interval ({lo}, {hi})")

    def component(self, i: int, j: int) -> Expr | None:
        return self.components.get((min(i, j), max(i, j)))

    def as_point(self, point) -> np.ndarray:
        if isinstance(point, Mapping):
            missing = [c for c in self.coords if c not in point]
            if missing:
                raise DomainError(f"point lacks coordinates {missing}")
            point = [point[c] for c in self.coords]
        x = np.asarray(point, dtype=float)
        if x.shape != (DIM,):
            raise DomainError(f"point must have {DIM} coordinates")
        return x

    def check_point(self, point) -> np.ndarray:
        x = self.as_point(point)
        for name, xi, (lo, hi) in zip(self.coords, x, self.domain):
            if not lo < xi < hi:
                raise DomainError(f"{name}={float(xi)!r} outside domain ({lo!r}, {hi!r}) of {self.name}")
        return x

    def metric(self, point) -> np.ndarray:
        """Float metric at ``point`` (no domain check: finite differences step outside)."""
        x = self.as_point(point)
        env = dict(zip(self.coords, x.tolist()))
        g = np.zeros((DIM, DIM))
        for (i, j), node in self.components.items():
            g[i, j] = g[j, i] = float(evaluate(node, env))
        return g

    def metric_jet(self, point) -> Jet:
        """Second-order jet of ``g`` at ``point``: one batched hyper-dual pass per component."""
        x = self.as_point(point)
        e1 = np.array([[float(a == c) for a, _ in _PAIRS] for c in range(DIM)])
        e2 = np.array([[float(b == c) for _, b in _PAIRS] for c in range(DIM)])
        env = {name: Dual2(float(x[c]), e1[c], e2[c], np.zeros(len(_PAIRS)))
               for c, name in enumerate(self.coords)}
        val = np.zeros((DIM, DIM))
        grad = np.zeros((DIM, DIM, DIM))
        hess = np.zeros((DIM, DIM, DIM, DIM))
        for (i, j), node in self.components.items():
            out = evaluate(node, env)
            if not isinstance(out, Dual2):
                val[i, j] = val[j, i] = float(out)
                continue
            val[i, j] = val[j, i] = float(np.asarray(out.re).flat[0])
            d1 = np.broadcast_to(out.e1, (len(_PAIRS),))
            d12 = np.broadcast_to(out.e12, (len(_PAIRS),))
            for p, (a, b) in enumerate(_PAIRS):
                if a == b:
                    grad[a, i, j] = grad[a, j, i] = d1[p]
                hess[a, b, i, j] = hess[a, b, j, i] = d12[p]
                hess[b, a, i, j] = hess[b, a, j, i] = d12[p]
        return Jet(val, grad, hess)

    def describe(self) -> str:
        lines = [f"{self.name}: coords {' '.join(self.coords)}"]
        if self.params:
            lines.append("  params: " + ", ".join(f"{k}={v:g}" for k, v in sorted(self.params.items())))
        for (i, j), node in sorted(self.components.items()):
            lines.append(f"  g[{self.coords[i]},{self.coords[j]}] = {pretty(node)}")
        return "\n".join(lines)


# --- builtin catalog -------------------------------------------------------

@dataclass(frozen=True)
class CatalogEntry:
    name: str
    summary: str
    defaults: Mapping[str, float]
    domain_note: str


CATALOG = {
    "minkowski": CatalogEntry(
        "minkowski", "flat space, Cartesian chart", {},
        "t, x, y, z in (-10, 10)"),
    "schwarzschild": CatalogEntry(
        "schwarzschild", "exterior Schwarzschild, Schwarzschild chart", {"M": 1.0},
        "r > 3M (horizon 2M plus 50% margin), sampled r in (3M, 20M); "
        "theta in (0.2, pi-0.2); t in (-10, 10); phi in (0, 2pi)"),
    "flrw-exp": CatalogEntry(
        "flrw-exp", "flat FLRW with scale factor exp(t)", {},
        "t, x, y, z in (-1, 1)"),
    "de-sitter": CatalogEntry(
        "de-sitter", "de Sitter static patch", {"lambda": 1.0},
        "0.2R < r < 0.8R with horizon R = sqrt(3/lambda); "
        "theta in (0.2, pi-0.2); t in (-10, 10); phi in (0, 2pi)"),
}


def _diag_spec(name, coords, diag, domain, params, notes=""):
    comps = {(i, i): parse(text, coords, params) for i, text in enumerate(diag)}
    return MetricSpec(name, tuple(coords), comps, tuple(domain), dict(params), notes)


def builtin(name: str, **params: float) -> MetricSpec:
    """Catalog metric ``name`` with parameters overriding the defaults."""
    try:
        entry = CATALOG[name]
    except KeyError:
        raise KeyError(f"unknown builtin metric {name!r}; known: {', '.join(CATALOG)}") from None
    unknown = set(params) - set(entry.defaults)
    if unknown:
        raise ValueError(f"{name} takes no parameter(s) {sorted(unknown)}")
    p = {**entry.defaults, **{k: float(v) for k, v in params.items()}}
    theta = (0.2, math.pi - 0.2)
    if name == "minkowski":
        return _diag_spec(name, "t x y z".split(), ["1", "-1", "-1", "-1"],
                          [(-10.0, 10.0)] * 4, p, entry.domain_note)
    if name == "schwarzschild":
        m = p["M"]
        if not m > 0:
            raise ValueError("schwarzschild needs M > 0")
        return _diag_spec(
            name, "t r theta phi".split(),
            ["1 - 2*M/r", "-1/(1 - 2*M/r)", "-r^2", "-r^2*sin(theta)^2"],
            [(-10.0, 10.0), (3.0 * m, 20.0 * m), theta, (0.0, 2 * math.pi)], p, entry.domain_note)
    if name == "flrw-exp":
        return _diag_spec(name, "t x y z".split(),
                          ["1", "-exp(2*t)", "-exp(2*t)", "-exp(2*t)"],
                          [(-1.0, 1.0)] * 4, p, entry.domain_note)
    lam = p["lambda"]
    if not lam > 0:
        raise ValueError("de-sitter needs lambda > 0")
    horizon = math.sqrt(3.0 / lam)
    return _diag_spec(
        name, "t r theta phi".split(),
        ["1 - lambda*r^2/3", "-1/(1 - lambda*r^2/3)", "-r^2", "-r^2*sin(theta)^2"],
        [(-10.0, 10.0), (0.2 * horizon, 0.8 * horizon), theta, (0.0, 2 * math.pi)], p,
        entry.domain_note)


# --- local geometry ---------------------------------------------------------

def christoffel(ginv, dg):
    """``Gamma[l, m, n]`` from ``ginv`` and ``dg[k, i, j] = d_k g_ij`` (arrays or Jets)."""
    lowered = (dual.einsum("mrn->rmn", dg) + dual.einsum("nrm->rmn", dg) - dg)
    return dual.einsum("lr,rmn->lmn", ginv, lowered) * 0.5


def riemann(gamma, dgamma):
    """``R[r, s, m, n] = R^r_{smn}`` from ``Gamma`` and ``dgamma[k, l, m, n] = d_k Gamma^l_{mn}``."""
    return (np.einsum("mrns->rsmn", dgamma) - np.einsum("nrms->rsmn", dgamma)
            + np.einsum("rml,lns->rsmn", gamma, gamma)
            - np.einsum("rnl,lms->rsmn", gamma, gamma))


def christoffel_jet(g: Jet) -> Jet:
    """First-order jet of ``Gamma`` from a second-order jet of ``g``."""
    ginv = dual.inv(g).truncate(1)
    return christoffel(ginv, g.d())


@dataclass(frozen=True)
class GeometryAtPoint:
    point: np.ndarray
    g: np.ndarray
    ginv: np.ndarray
    dg: np.ndarray          # dg[l, m, n] = d_l g_mn
    gamma: np.ndarray       # gamma[l, m, n] = Gamma^l_{mn}
    dgamma: np.ndarray      # dgamma[k, l, m, n] = d_k Gamma^l_{mn}
    riemann: np.ndarray     # riemann[r, s, m, n] = R^r_{smn}
    riemann_down: np.ndarray  # R_{rsmn}
    g_jet: Jet = field(repr=False)
    gamma_jet: Jet = field(repr=False)


def _check_metric_value(g: np.ndarray, where: str):
    if not np.all(np.isfinite(g)):
        raise SingularMetricError(f"metric not finite at {where}")
    cond = np.linalg.cond(g)
    if not cond < 1e12:
        raise SingularMetricError(f"metric singular at {where} (condition number {cond:.3g})")
    sig = signature(g)
    if sig != (1, 3):
        raise SignatureError(f"metric signature {sig} at {where}; expected (1, 3)")


def geometry_at(spec: MetricSpec, point) -> GeometryAtPoint:
    x = spec.check_point(point)
    gj = spec.metric_jet(x)
    _check_metric_value(gj.val, f"{spec.name} {x.tolist()}")
    gam = christoffel_jet(gj)
    ginv = np.linalg.inv(gj.val)
    r_up = riemann(gam.val, gam.grad)
    r_down = np.einsum("ar,rbmn->abmn", gj.val, r_up)
    return GeometryAtPoint(x, gj.val, ginv, gj.grad, gam.val, gam.grad, r_up, r_down, gj, gam)


def curvature_bivector(geo: GeometryAtPoint, mu: int, nu: int) -> Multivector:
    """``C_{mu nu} = 1/2 R_{ab mu nu} dx^a ^ dx^b``."""
    if mu > nu:
        # exact antisymmetry, independent of summation order
        return -curvature_bivector(geo, nu, mu)
    coeffs = np.zeros(len(INDEX))
    for a in range(DIM):
        for b in range(a + 1, DIM):
            coeffs[INDEX[(a, b)]] = geo.riemann_down[a, b, mu, nu]
    return Multivector(coeffs)


# --- tetrads -----------------------------------------------------------------

@dataclass(frozen=True)
class Tetrad:
    """Co-frame ``l^a = e[a, mu] dx^mu`` with ``g = e^T eta e``; ``einv = e^{-1}``."""

    e: object
    einv: object
    mode: str  # "triangular" or "eigen"
    pivots: tuple[int, ...] = ()

    def value(self) -> "Tetrad":
        return Tetrad(dual.value(self.e), dual.value(self.einv), self.mode, self.pivots)


def _outer(v):
    return dual.einsum("i,j->ij", v, v)


def tetrad_from_metric(g, *, allow_eigen: bool = True, tol: float = 1e-13) -> Tetrad:
    """Signature-aware symmetric elimination in declared coordinate order.

    The first coordinate with a positive remaining diagonal yields ``l^0``;
    the remaining coordinates, in order, yield ``l^1..l^3``.  Pivot choices
    are made on values only, so Jets pass through smoothly.  Without a
    timelike diagonal pivot, float metrics fall back to an eigen-decomposition.
    """
    gv = np.asarray(dual.value(g), dtype=float)
    scale = float(np.max(np.abs(gv)))
    q = g
    rows = []
    used: list[int] = []
    for a in range(DIM):
        qv = np.asarray(dual.value(q))
        want = 1.0 if a == 0 else -1.0
        piv = next((p for p in range(DIM) if p not in used and want * qv[p, p] > tol * scale), None)
        if piv is None:
            if a == 0 and allow_eigen and not isinstance(g, Jet):
                return _eigen_tetrad(gv)
            raise PivotBreakdown(a)
        # sign chosen so diagonal metrics give l^a = +sqrt(|g_aa|) dx^a
        row = q[piv, :] * (want / dual.sqrt(q[piv, piv] * want))
        q = q - _outer(row) * want
        rows.append(row)
        used.append(piv)
    e = dual.stack(rows)
    return Tetrad(e, dual.inv(e), "triangular", tuple(used))


def _eigen_tetrad(g: np.ndarray) -> Tetrad:
    vals, vecs = np.linalg.eigh(g)
    order = [int(np.argmax(vals))] + [i for i in range(DIM) if i != int(np.argmax(vals))]
    e = np.array([np.sqrt(abs(vals[i])) * vecs[:, i] for i in order])
    return Tetrad(e, np.linalg.inv(e), "eigen")


def tetrad_at(spec: MetricSpec, point, *, jet: bool = False) -> Tetrad:
    """Tetrad at ``point``; with ``jet=True`` components carry second-order jets."""
    x = spec.check_point(point)
    if jet:
        return tetrad_from_metric(spec.metric_jet(x))
    return tetrad_from_metric(spec.metric(x))


# --- finite-difference oracles ----------------------------------------------

def central_difference(f, x: np.ndarray, k: int, h: float, accuracy: int = 2):
    """Central difference of ``f`` along coordinate ``k`` (2nd- or 4th-order stencil)."""
    step = np.zeros(DIM)
    step[k] = h
    if accuracy == 2:
        return (f(x + step) - f(x - step)) / (2 * h)
    if accuracy == 4:
        return (-f(x + 2 * step) + 8 * f(x + step) - 8 * f(x - step) + f(x - 2 * step)) / (12 * h)
    raise ValueError("accuracy must be 2 or 4")


def metric_derivative_fd(spec: MetricSpec, point, h: float = 1e-5, accuracy: int = 2) -> np.ndarray:
    x = spec.as_point(point)
    return np.array([central_difference(spec.metric, x, k, h, accuracy) for k in range(DIM)])


def christoffel_fd(spec: MetricSpec, point, h: float = 1e-5, accuracy: int = 2) -> np.ndarray:
    x = spec.as_point(point)
    return christoffel(np.linalg.inv(spec.metric(x)), metric_derivative_fd(spec, x, h, accuracy))


def riemann_fd(spec: MetricSpec, point, h: float = 1e-3) -> np.ndarray:
    """``R^r_{smn}`` from finite-difference Christoffels and their central differences.

    Both levels use the 4th-order stencil; nested 2nd-order differences lose
    too many digits where the curvature is small compared with ``Gamma``.
    """
    x = spec.as_point(point)

    def gamma(y):
        return christoffel_fd(spec, y, h, accuracy=4)

    dgamma = np.array([central_difference(gamma, x, k, h, accuracy=4) for k in range(DIM)])
    return riemann(gamma(x), dgamma)


def tetrad_derivative_fd(spec: MetricSpec, point, h: float = 1e-5) -> np.ndarray:
    """``d_k e[a, mu]`` by central differences of float tetrads."""
    x = spec.as_point(point)
    out = np.zeros((DIM, DIM, DIM))
    for k in range(DIM):
        step = np.zeros(DIM)
        step[k] = h
        plus = tetrad_from_metric(spec.metric(x + step)).e
        minus = tetrad_from_metric(spec.metric(x - step)).e
        out[k] = (plus - minus) / (2 * h)
    return out


def relative_error(a, b, floor: float = 1e-300) -> float:
    """``max|a - b| / max|b|``; the absolute difference when ``b`` vanishes."""
    diff = float(np.max(np.abs(np.asarray(a) - np.asarray(b))))
    scale = float(np.max(np.abs(b)))
    return diff / scale if scale > floor else diff
