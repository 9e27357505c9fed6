"""Command line: ``cliffgauge verify | check-point | metrics``.

Exit codes: 0 all identities pass, 1 some identity fails (the report is
still written), 2 configuration, parse, domain or signature errors.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import expr
from .gauge import PAIRS, build_HIK, connection_field, field_strength, half_curvature, site_at
from .geometry import CATALOG, DIM, DomainError, MetricSpec, PivotBreakdown, SingularMetricError
from .metricfile import MetricFileError
from .multivector import BLADES, SignatureError
from .verify import (DEFAULT_TOLERANCES, SUITES, ConfigError, RunConfig, evaluate_point,
                     render_text, resolve_metrics, run)

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2
_CONFIG_ERRORS = (ConfigError, MetricFileError, expr.ParseError, expr.EvalError, SignatureError,
                  SingularMetricError, DomainError, PivotBreakdown, OSError, KeyError, ValueError)


def _param(text: str) -> tuple[str, float]:
    name, sep, value = text.partition("=")
    if not sep or not name.strip():
        raise argparse.ArgumentTypeError(f"expected k=v, got {text!r}")
    try:
        return name.strip(), float(expr.evaluate(expr.parse(value), {}))
    except (expr.ParseError, ArithmeticError) as exc:
        raise argparse.ArgumentTypeError(f"bad value in {text!r}: {exc}") from None


def _positive(text: str) -> float:
    x = float(text)
    if not x > 0:
        raise argparse.ArgumentTypeError("tolerance must be positive")
    return x


def parse_point(text: str, spec: MetricSpec) -> np.ndarray:
    """``"t=0,r=6,theta=pi/3,phi=0.5"`` in the chart of ``spec``.

    Values are expressions in parameters and ``pi``.  Errors are
    :class:`~cliffgauge.expr.ParseError` with offsets into ``text``.
    """
    values: dict[str, float] = {}
    start = 0
    for piece in text.split(","):
        name, sep, value = piece.partition("=")
        lead = len(name) - len(name.lstrip())
        if not sep:
            raise expr.ParseError(start + len(piece), "missing '='", "name=value")
        key = name.strip()
        if key not in spec.coords:
            raise expr.ParseError(start + lead, f"unknown coordinate {key!r}",
                                  "one of " + ", ".join(spec.coords))
        if key in values:
            raise expr.ParseError(start + lead, f"coordinate {key!r} given twice")
        base = start + len(name) + 1
        try:
            values[key] = float(expr.evaluate(expr.parse(value, (), spec.params), {}))
        except expr.ParseError as exc:
            raise expr.ParseError(base + exc.offset, exc.message, exc.expected) from None
        start += len(piece) + 1
    missing = [c for c in spec.coords if c not in values]
    if missing:
        raise expr.ParseError(len(text), f"missing coordinate(s) {', '.join(missing)}")
    return np.array([values[c] for c in spec.coords])


def _terms(mv) -> dict[str, float]:
    c = mv.coeffs
    return {("dx" + "".join(map(str, b)) if b else "1"): float(c[i])
            for i, b in enumerate(BLADES) if c[i] != 0}


def point_dump(spec: MetricSpec, point) -> dict:
    site = site_at(spec, point)
    triple = build_HIK(site.tetrad)
    B = connection_field(triple, site)
    names = spec.coords
    dump = {
        "metric": spec.name,
        "point": {c: float(x) for c, x in zip(names, site.point)},
        "g": site.geo.g.tolist(),
        "christoffel": site.geo.gamma.tolist(),
        "tetrad": np.asarray(site.tetrad.value().e, dtype=float).tolist(),
        "H": _terms(triple.H.value()),
        "I": _terms(triple.I.value()),
        "K": _terms(triple.K.value()),
        "B": {names[mu]: _terms(B[mu].value()) for mu in range(DIM)},
        "F": {}, "half_C": {},
    }
    for mu, nu in PAIRS:
        key = f"{names[mu]},{names[nu]}"
        dump["F"][key] = _terms(field_strength(B, site, mu, nu))
        dump["half_C"][key] = _terms(half_curvature(site, mu, nu))
    dump["residuals"] = evaluate_point(spec, point, SUITES, site=site).residuals
    return dump


def _render_dump(dump: dict) -> str:
    lines = []
    for key, value in dump.items():
        if isinstance(value, dict) and value and all(isinstance(v, dict) for v in value.values()):
            lines.append(f"{key}:")
            lines += [f"  {k}: {json.dumps(v)}" for k, v in value.items()]
        elif key == "residuals":
            lines.append("residuals:")
            lines += [f"  {k}: {v:.3e}" for k, v in value.items()]
        else:
            lines.append(f"{key}: {json.dumps(value)}")
    return "\n".join(lines) + "\n"


def metrics_listing() -> str:
    lines = []
    for name, entry in CATALOG.items():
        params = ", ".join(f"{k}={v:g}" for k, v in entry.defaults.items()) or "none"
        lines.append(f"{name}: {entry.summary}")
        lines.append(f"  parameters: {params}")
        lines.append(f"  domain: {entry.domain_note}")
    lines.append("file:PATH: metric file (coords / param / domain / g lines)")
    return "\n".join(lines) + "\n"


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cliffgauge", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run the identity suites at seeded sample points")
    v.add_argument("--metric", action="append", default=None,
                   help="builtin name, file:PATH or all (repeatable; default all)")
    v.add_argument("--param", action="append", type=_param, default=[], metavar="K=V")
    v.add_argument("--points", type=int, default=20)
    v.add_argument("--seed", type=int, default=0)
    for cls in DEFAULT_TOLERANCES:
        v.add_argument(f"--tol-{cls}", type=_positive, default=None, metavar="TOL",
                       help=f"tolerance for {cls} (default {DEFAULT_TOLERANCES[cls]:g})")
    v.add_argument("--suite", action="append", choices=SUITES, default=None,
                   help="restrict to these suites (repeatable; default all)")
    v.add_argument("--fields", type=int, default=1, help="random test fields per point")
    v.add_argument("--report", default=None, help="write the report here instead of stdout")
    v.add_argument("--format", choices=("json", "text"), default="json")
    v.add_argument("--timing", action="store_true",
                   help="add wall time to the report (breaks byte reproducibility)")

    c = sub.add_parser("check-point", help="dump every intermediate quantity at one point")
    c.add_argument("--metric", required=True)
    c.add_argument("--param", action="append", type=_param, default=[], metavar="K=V")
    c.add_argument("--point", required=True, help='e.g. "t=0,r=6,theta=1.0,phi=0.5"')
    c.add_argument("--format", choices=("json", "text"), default="text")

    sub.add_parser("metrics", help="list the builtin metric catalog")
    return p


def _cmd_verify(args) -> int:
    tolerances = {cls: getattr(args, f"tol_{cls}") for cls in DEFAULT_TOLERANCES
                  if getattr(args, f"tol_{cls}") is not None}
    config = RunConfig(
        metrics=tuple(args.metric or ["all"]), params=dict(args.param), points=args.points,
        seed=args.seed, tolerances={**DEFAULT_TOLERANCES, **tolerances},
        suites=tuple(args.suite or SUITES), fields_per_point=args.fields,
        report=args.report, format=args.format)
    metrics = resolve_metrics(config.metrics, config.params)
    start = time.perf_counter()
    report = run(config, metrics)
    if args.timing:
        report["wall_time_s"] = round(time.perf_counter() - start, 3)
    text = (json.dumps(report, indent=2) + "\n") if config.format == "json" else render_text(report)
    if config.report:
        Path(config.report).write_text(text)
        print(("PASS" if report["pass"] else "FAIL") + f": report written to {config.report}")
    else:
        sys.stdout.write(text)
    return EXIT_OK if report["pass"] else EXIT_FAIL


def _cmd_check_point(args) -> int:
    [(_, spec)] = resolve_metrics([args.metric], dict(args.param))
    point = parse_point(args.point, spec)
    dump = point_dump(spec, point)
    sys.stdout.write(json.dumps(dump, indent=2) + "\n" if args.format == "json" else _render_dump(dump))
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        if args.command == "metrics":
            sys.stdout.write(metrics_listing())
            return EXIT_OK
        if args.command == "check-point":
            return _cmd_check_point(args)
        return _cmd_verify(args)
    except _CONFIG_ERRORS as exc:
        kind = type(exc).__name__
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error ({kind}): {msg}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
