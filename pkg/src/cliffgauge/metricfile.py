"""Line-oriented metric files.

::

    # Schwarzschild, written out by hand
    coords: t r theta phi
    param M: 1
    domain r: (3*M, 20*M)
    domain theta: (0.2, pi - 0.2)
    g 0 0: 1 - 2*M/r
    g r r: -1/(1 - 2*M/r)
    g 2 2: -r^2
    g phi phi: -r^2*sin(theta)^2

``coords`` must come first.  Component indices are numbers or coordinate
names; ``g i j`` and ``g j i`` name the same entry, unlisted entries are 0.
Domain bounds are expressions in parameters and ``pi``; coordinates without a
``domain`` line default to ``(-1, 1)``.  ``#`` starts a comment.
"""
from __future__ import annotations

import re
from pathlib import Path
from typing import Mapping

import numpy as np

from .expr import EvalError, ParseError, evaluate, parse
from .geometry import MetricSpec, SingularMetricError
from .multivector import SignatureError, signature

DEFAULT_DOMAIN = (-1.0, 1.0)


class MetricFileError(ValueError):
    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


_INTERVAL = re.compile(r"^\(\s*(.+?)\s*,\s*(.+?)\s*\)$")


def _constant(text: str, params: Mapping[str, float], lineno: int) -> float:
    try:
        return float(evaluate(parse(text, (), params), {}))
    except (ParseError, ArithmeticError) as exc:
        raise MetricFileError(lineno, f"bad constant {text!r}: {exc}") from None


def parse_metric_text(text: str, name: str = "file",
                      overrides: Mapping[str, float] | None = None) -> MetricSpec:
    coords: tuple[str, ...] | None = None
    params: dict[str, float] = {}
    raw_domains: dict[str, tuple[int, str]] = {}
    raw_components: dict[tuple[int, int], tuple[int, str]] = {}

    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        head, sep, body = line.partition(":")
        if not sep:
            raise MetricFileError(lineno, "expected 'key: value'")
        words = head.split()
        body = body.strip()
        if words == ["coords"]:
            if coords is not None:
                raise MetricFileError(lineno, "coords declared twice")
            coords = tuple(body.split())
            if len(coords) != 4 or len(set(coords)) != 4:
                raise MetricFileError(lineno, "need four distinct coordinate names")
            continue
        if coords is None:
            raise MetricFileError(lineno, "'coords:' must come first")
        if words[0] == "param" and len(words) == 2:
            params[words[1]] = _constant(body, params, lineno)
        elif words[0] == "domain" and len(words) == 2:
            if words[1] not in coords:
                raise MetricFileError(lineno, f"domain for undeclared coordinate {words[1]!r}")
            raw_domains[words[1]] = (lineno, body)
        elif words[0] == "g" and len(words) == 3:
            idx = []
            for w in words[1:]:
                if w in coords:
                    idx.append(coords.index(w))
                elif w.isdigit() and int(w) < 4:
                    idx.append(int(w))
                else:
                    raise MetricFileError(lineno, f"bad component index {w!r}")
            key = (min(idx), max(idx))
            if key in raw_components:
                raise MetricFileError(lineno, f"component g {key[0]} {key[1]} given twice")
            raw_components[key] = (lineno, body)
        else:
            raise MetricFileError(lineno, f"unknown directive {head!r}")

    if coords is None:
        raise MetricFileError(0, "missing 'coords:' line")
    if overrides:
        unknown = set(overrides) - set(params)
        if unknown:
            raise MetricFileError(0, f"metric file declares no parameter(s) {sorted(unknown)}")
        params.update({k: float(v) for k, v in overrides.items()})

    domains = []
    for c in coords:
        if c not in raw_domains:
            domains.append(DEFAULT_DOMAIN)
            continue
        lineno, body = raw_domains[c]
        m = _INTERVAL.match(body)
        if not m:
            raise MetricFileError(lineno, "domain must look like (lo, hi)")
        lo, hi = _constant(m.group(1), params, lineno), _constant(m.group(2), params, lineno)
        if not lo < hi:
            raise MetricFileError(lineno, f"empty domain ({lo}, {hi})")
        domains.append((lo, hi))

    components = {}
    for key, (lineno, body) in raw_components.items():
        try:
            components[key] = parse(body, coords, params)
        except ParseError as exc:
            raise MetricFileError(lineno, f"{exc} in {body!r}") from None
    spec = MetricSpec(name, coords, components, tuple(domains), params)
    _check_midpoint(spec)
    return spec


def _check_midpoint(spec: MetricSpec) -> None:
    """Reject files whose metric is not a (1, 3) metric at the domain centre."""
    mid = [0.5 * (lo + hi) for lo, hi in spec.domain]
    try:
        g = spec.metric(mid)
    except EvalError as exc:
        raise MetricFileError(0, f"metric undefined at domain midpoint {mid}: {exc}") from None
    if not np.all(np.isfinite(g)) or abs(np.linalg.det(g)) == 0.0:
        raise SingularMetricError(f"{spec.name}: metric singular at domain midpoint {mid}")
    sig = signature(g)
    if sig != (1, 3):
        raise SignatureError(f"{spec.name}: metric signature {sig} at domain midpoint {mid}; "
                             "expected (1, 3)")


def load_metric_file(path: str | Path, overrides: Mapping[str, float] | None = None) -> MetricSpec:
    path = Path(path)
    return parse_metric_text(path.read_text(), name=f"file:{path}", overrides=overrides)
