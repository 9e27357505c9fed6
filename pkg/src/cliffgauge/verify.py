"""Seeded verification runs and their reports.

For every selected metric, ``points`` chart points are drawn uniformly from
its domain box and every identity is evaluated there.  Each identity reduces
to its maximum residual over the points, which is compared with the
tolerance of its class.

Sampling.  Each metric selector ``s`` gets its own pair of generators,
derived from the run seed and ``k = crc32(s)``::

    base   = SplitMix64(seed)
    points = base.child(2 * k)        # coordinates, in declared order
    aux    = base.child(2 * k + 1)    # test fields and rotations

so a metric draws the same points whether it runs alone or inside ``all``.
A point takes one uniform per coordinate: ``x_i = lo_i + (hi_i - lo_i) u``.
"""
from __future__ import annotations

import math
import zlib
from dataclasses import asdict, dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .gauge import (PAIRS, PROOF_RELATIONS, Site, StructureTriple, build_HIK, check_proof_relations,
                    connection_field, curvature_commutator, eq3_residuals, field_strength,
                    half_curvature, polynomial_field, random_rotation, site_at, upsilon)
from .geometry import CATALOG, DIM, MetricSpec, builtin
from .multivector import NBLADES
from .rng import SplitMix64

SCHEMA = 1
SUITES = ("eq3", "eq2", "eq1", "proof", "grade", "commutator")
DEFAULT_TOLERANCES = {"eq1": 1e-6, "eq2": 1e-8, "eq3": 1e-10, "proof": 1e-9,
                      "grade": 1e-10, "commutator": 1e-6}
EQ3_NAMES = ("H^2=1", "I^2=-1", "K^2=-1", "[H,I]=0", "[H,K]=0", "{I,K}=0")
_EQ3_KEYS = ("H2", "I2", "K2", "HI", "HK", "IK")
# Below this upsilon scale the eq2 residual is read as an absolute one:
# scale / floor = 1e-10 / 1e-8 at the default tolerance.
EQ2_SCALE_FLOOR = 1e-2


def identity_names(suite: str) -> tuple[str, ...]:
    if suite == "eq3":
        return tuple(f"eq3:{n}" for n in EQ3_NAMES)
    if suite == "eq2":
        return ("eq2:H", "eq2:I", "eq2:K")
    if suite == "proof":
        return tuple(f"proof:{n}" for n in PROOF_RELATIONS)
    if suite == "grade":
        return ("grade-purity",)
    if suite == "commutator":
        return ("commutator-consistency",)
    return ("eq1",)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    metrics: tuple[str, ...] = ("all",)
    params: Mapping[str, float] = field(default_factory=dict)
    points: int = 20
    seed: int = 0
    tolerances: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    suites: tuple[str, ...] = SUITES
    fields_per_point: int = 1
    report: str | None = None
    format: str = "json"

    def __post_init__(self):
        if self.points < 1:
            raise ConfigError("point count must be at least 1")
        if self.fields_per_point < 1:
            raise ConfigError("fields per point must be at least 1")
        for name, tol in self.tolerances.items():
            if name not in DEFAULT_TOLERANCES:
                raise ConfigError(f"unknown tolerance class {name!r}")
            if not (tol > 0 and math.isfinite(tol)):
                raise ConfigError(f"tolerance for {name} must be positive, got {tol}")
        unknown = set(self.suites) - set(SUITES)
        if unknown:
            raise ConfigError(f"unknown suite(s) {sorted(unknown)}")
        if self.format not in ("json", "text"):
            raise ConfigError(f"unknown format {self.format!r}")

    def tolerance(self, suite: str) -> float:
        return float(self.tolerances.get(suite, DEFAULT_TOLERANCES[suite]))

    def echo(self) -> dict:
        d = asdict(self)
        # where the report goes does not change what it says
        del d["report"]
        d["metrics"] = list(self.metrics)
        d["params"] = dict(sorted(self.params.items()))
        d["suites"] = [s for s in SUITES if s in self.suites]
        d["tolerances"] = {s: self.tolerance(s) for s in SUITES}
        return d


def resolve_metrics(selectors: Sequence[str], params: Mapping[str, float]) -> list[tuple[str, MetricSpec]]:
    """Expand ``all`` and load builtins or ``file:PATH`` metrics.

    Parameters are routed to every metric that declares them; a parameter
    nobody declares is a configuration error.
    """
    from .metricfile import load_metric_file  # avoid an import cycle at module load

    names: list[str] = []
    for s in selectors:
        for n in (list(CATALOG) if s == "all" else [s]):
            if n not in names:
                names.append(n)
    out = []
    used: set[str] = set()
    for n in names:
        if n.startswith("file:"):
            spec = load_metric_file(n[5:])
            mine = {k: v for k, v in params.items() if k in spec.params}
            if mine:
                spec = load_metric_file(n[5:], overrides=mine)
        elif n in CATALOG:
            mine = {k: v for k, v in params.items() if k in CATALOG[n].defaults}
            spec = builtin(n, **mine)
        else:
            raise ConfigError(f"unknown metric {n!r}; builtins are {', '.join(CATALOG)} "
                              "or use file:PATH")
        used |= set(mine)
        out.append((n, spec))
    unused = set(params) - used
    if unused:
        raise ConfigError(f"no selected metric takes parameter(s) {sorted(unused)}")
    return out


def streams(seed: int, selector: str) -> tuple[SplitMix64, SplitMix64]:
    k = zlib.crc32(selector.encode())
    base = SplitMix64(seed)
    return base.child(2 * k), base.child(2 * k + 1)


def sample_points(spec: MetricSpec, n: int, rng: SplitMix64) -> list[np.ndarray]:
    return [np.array([rng.uniform(lo, hi) for lo, hi in spec.domain]) for _ in range(n)]


def random_field(rng: SplitMix64):
    vals = rng.uniforms(NBLADES, -1.0, 1.0)
    grads = rng.uniforms(DIM * NBLADES, -1.0, 1.0)
    hess = rng.uniforms(DIM * DIM * NBLADES, -1.0, 1.0)
    return polynomial_field(np.array(vals), np.reshape(grads, (DIM, NBLADES)),
                            np.reshape(hess, (DIM, DIM, NBLADES)))


def _relative(diff: float, scale: float) -> float:
    return diff / scale if scale > 0 else diff


@dataclass
class PointResult:
    residuals: dict[str, float]
    fc: float = 0.0   # sum over pairs of F . C
    cc: float = 0.0   # sum over pairs of C . C


def evaluate_point(spec: MetricSpec, point, suites: Iterable[str] = SUITES, *,
                   aux: SplitMix64 | None = None, rotation=None, fields: int = 1,
                   site: Site | None = None) -> PointResult:
    """All residuals of the selected suites at one point.

    ``rotation`` is a constant 3x3 spatial rotation of the co-frame applied
    before H, I, K are built.  The commutator suite draws ``fields`` random
    quadratic test fields from ``aux``.
    """
    suites = set(suites)
    site = site or site_at(spec, point)
    # algebraic checks alone need no derivative data
    needs_jets = bool(suites - {"eq3"})
    triple = build_HIK(site.tetrad if needs_jets else site.tetrad.value(), rotation)
    res: dict[str, float] = {}
    out = PointResult(res)

    if "eq3" in suites:
        r = eq3_residuals(triple, site.ctx)
        res.update({f"eq3:{n}": r[k] for n, k in zip(EQ3_NAMES, _EQ3_KEYS)})
    if "proof" in suites:
        worst = dict.fromkeys(PROOF_RELATIONS, 0.0)
        for mu in range(DIM):
            for k, v in check_proof_relations(triple, site, mu).items():
                worst[k] = max(worst[k], v)
        res.update({f"proof:{k}": v for k, v in worst.items()})

    if suites & {"eq2", "eq1", "grade"}:
        B = connection_field(triple, site)
        if "grade" in suites:
            res["grade-purity"] = B.grade_residual()
        if "eq2" in suites:
            for name, X in zip("HIK", triple):
                ups = [upsilon(X, site, mu).value() for mu in range(DIM)]
                scale = max(u.max_abs() for u in ups)
                dev = max((u - site.ctx.comm(B[mu].value(), X.value())).max_abs()
                          for mu, u in enumerate(ups))
                res[f"eq2:{name}"] = dev / max(scale, EQ2_SCALE_FLOOR)
        if "eq1" in suites:
            diff = scale = 0.0
            for mu, nu in PAIRS:
                F = field_strength(B, site, mu, nu).coeffs
                half = half_curvature(site, mu, nu).coeffs
                diff = max(diff, float(np.max(np.abs(F - half))))
                scale = max(scale, float(np.max(np.abs(half))))
                out.fc += float(F @ (2 * half))
                out.cc += float((2 * half) @ (2 * half))
            res["eq1"] = _relative(diff, scale)

    if "commutator" in suites:
        if aux is None:
            aux = SplitMix64(0)
        worst = 0.0
        for _ in range(fields):
            U = random_field(aux)
            pairs = [curvature_commutator(site, U, mu, nu) for mu, nu in PAIRS]
            diff = max((lhs - rhs).max_abs() for lhs, rhs in pairs)
            scale = max(max(lhs.max_abs(), rhs.max_abs()) for lhs, rhs in pairs)
            worst = max(worst, _relative(diff, scale))
        res["commutator-consistency"] = worst
    return out


def _finite(x: float) -> float | None:
    return float(x) if math.isfinite(x) else None


def verify_metric(selector: str, spec: MetricSpec, config: RunConfig, *,
                  rotation=None) -> dict:
    """Report section for one metric (plain JSON-ready data)."""
    pts_rng, aux = streams(config.seed, selector)
    points = sample_points(spec, config.points, pts_rng)
    names = [n for s in SUITES if s in config.suites for n in identity_names(s)]
    worst = {n: (-math.inf, None) for n in names}
    fc = cc = 0.0
    for x in points:
        r = evaluate_point(spec, x, config.suites, aux=aux, rotation=rotation,
                           fields=config.fields_per_point)
        fc += r.fc
        cc += r.cc
        for n in names:
            v = r.residuals[n]
            # NaN counts as worse than anything so it is never hidden
            if (math.isnan(v) and not math.isnan(worst[n][0])) or v > worst[n][0]:
                worst[n] = (v, x)

    identities = {}
    for s in SUITES:
        if s not in config.suites:
            continue
        tol = config.tolerance(s)
        for n in identity_names(s):
            v, x = worst[n]
            value = _finite(v)
            identities[n] = {
                "residual": value,
                "tolerance": tol,
                "pass": value is not None and value <= tol,
                "worst_point": {c: float(xi) for c, xi in zip(spec.coords, x)},
            }
    section = {
        "coords": list(spec.coords),
        "params": dict(sorted(spec.params.items())),
        "domain": {c: [lo, hi] for c, (lo, hi) in zip(spec.coords, spec.domain)},
        "identities": identities,
        "pass": all(i["pass"] for i in identities.values()),
    }
    if "eq1" in config.suites:
        section["best_fit_ratio"] = _finite(fc / cc) if cc > 0 else None
    return section


def run(config: RunConfig, metrics: list[tuple[str, MetricSpec]] | None = None) -> dict:
    if metrics is None:
        metrics = resolve_metrics(config.metrics, config.params)
    sections = {sel: verify_metric(sel, spec, config) for sel, spec in metrics}
    return {
        "schema": SCHEMA,
        "config": config.echo(),
        "metrics": sections,
        "pass": all(s["pass"] for s in sections.values()),
    }


def frame_covariance_check(spec: MetricSpec, point, rotation,
                           suites: Iterable[str] = ("eq3", "eq2", "eq1", "proof", "grade")) -> dict[str, float]:
    """Residuals of the system rebuilt from a co-frame rotated by ``rotation``."""
    return evaluate_point(spec, point, suites, rotation=rotation).residuals


def random_rotations(n: int, seed: int) -> list[np.ndarray]:
    rng = SplitMix64(seed)
    return [random_rotation(rng.uniform) for _ in range(n)]


def _fmt(v) -> str:
    return "null" if v is None else f"{v:.3e}"


def render_text(report: dict) -> str:
    lines = [f"schema {report['schema']}  seed {report['config']['seed']}  "
             f"points {report['config']['points']}"]
    for sel, sec in report["metrics"].items():
        lines.append(f"{sel}: {'PASS' if sec['pass'] else 'FAIL'}")
        for name, ident in sec["identities"].items():
            flag = "ok  " if ident["pass"] else "FAIL"
            lines.append(f"  {flag} {name:<22} {_fmt(ident['residual'])} <= {ident['tolerance']:.0e}")
        if "best_fit_ratio" in sec:
            r = sec["best_fit_ratio"]
            lines.append(f"  best-fit F:C ratio {'null' if r is None else f'{r:.10f}'}")
    lines.append("overall: " + ("PASS" if report["pass"] else "FAIL"))
    return "\n".join(lines) + "\n"
