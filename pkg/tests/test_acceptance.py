"""Acceptance criteria, one test each.

Every test records a one-line verdict; the lines are printed as they happen
and again in the terminal summary (see ``conftest.py``).
"""
from __future__ import annotations

import time

import numpy as np
import pytest

from cliffgauge.cli import main
from cliffgauge.geometry import (CATALOG, builtin, christoffel_fd, geometry_at, relative_error,
                                 riemann_fd, tetrad_from_metric)
from cliffgauge.gauge import build_HIK, connection_field, site_at
from cliffgauge.multivector import BLADES, CliffordContext, Multivector, clifford_mul_sparse, frame_route_mul
from cliffgauge.rng import SplitMix64
from cliffgauge.verify import (RunConfig, identity_names, random_rotations, resolve_metrics,
                               run, sample_points, streams, verify_metric)

from conftest import random_metric

SEED = 2026
POINTS = 100
ALL = tuple(CATALOG)
CURVED = ("schwarzschild", "flrw-exp", "de-sitter")
VERDICTS: list[str] = []


def record(name: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
    VERDICTS.append(line)
    print(line)


def timed_run(suites, metrics=ALL, points=POINTS, **kw):
    start = time.perf_counter()
    report = run(RunConfig(metrics=metrics, points=points, seed=SEED, suites=suites, **kw))
    return report, time.perf_counter() - start


def worst(report, suite):
    out = 0.0
    for sec in report["metrics"].values():
        for n in identity_names(suite):
            r = sec["identities"][n]["residual"]
            out = float("inf") if r is None else max(out, r)
    return out


def test_eq3_suite():
    report, secs = timed_run(("eq3",))
    res = worst(report, "eq3")
    ok = res <= 1e-10 and secs <= 5.0 and report["pass"]
    record("eq3 suite", ok, f"max residual {res:.2e} (<= 1e-10), 4 metrics x {POINTS} points, "
                                f"{secs:.2f} s (<= 5 s)")
    assert ok


def test_eq2_suite():
    report, secs = timed_run(("eq2",))
    res = worst(report, "eq2")
    ok = res <= 1e-8 and secs <= 20.0 and report["pass"]
    record("eq2 suite", ok, f"max relative residual {res:.2e} (<= 1e-8), 4 metrics x {POINTS} "
                                f"points x 4 mu, {secs:.2f} s (<= 20 s)")
    assert ok


def test_eq1_suite():
    report, secs = timed_run(("eq1",), metrics=CURVED)
    res = worst(report, "eq1")
    ratios = [report["metrics"][m]["best_fit_ratio"] for m in CURVED]
    ratio_ok = all(r is not None and 0.4999 <= r <= 0.5001 for r in ratios)
    ok = res <= 1e-6 and ratio_ok and secs <= 30.0 and report["pass"]
    record("eq1 suite", ok, f"max relative residual {res:.2e} (<= 1e-6), best-fit F:C ratios "
                                f"{', '.join(f'{r:.8f}' for r in ratios)} (in [0.4999, 0.5001]), "
                                f"{secs:.2f} s (<= 30 s)")
    assert ok


def test_proof_relations_suite():
    report, secs = timed_run(("proof",))
    res = worst(report, "proof")
    ok = res <= 1e-9 and report["pass"]
    record("Proof relations", ok, f"max residual {res:.2e} (<= 1e-9) over six relations, "
                                  f"4 metrics x {POINTS} points")
    assert ok


def test_flat_space_exactness():
    spec = builtin("minkowski")
    report, _ = timed_run(tuple(RunConfig().suites), metrics=("minkowski",))
    ids = report["metrics"]["minkowski"]["identities"]
    res = max(i["residual"] for i in ids.values())
    bmax = 0.0
    for x in sample_points(spec, POINTS, streams(SEED, "minkowski")[0]):
        site = site_at(spec, x)
        B = connection_field(build_HIK(site.tetrad), site)
        bmax = max(bmax, max(B[mu].value().max_abs() for mu in range(4)))
    ok = bmax == 0.0 and res <= 1e-14
    record("Flat-space exactness", ok, f"max |B_mu| = {bmax:.1e} (= 0), max residual over "
                                       f"{len(ids)} identities {res:.1e} (<= 1e-14)")
    assert ok


def test_convention_anchor():
    # one random quadratic test field at each of 20 points: 20 fields per metric
    report, _ = timed_run(("commutator",), points=20, fields_per_point=1)
    res = worst(report, "commutator")
    ok = res <= 1e-6 and report["pass"]
    record("Convention anchor", ok, f"max relative |[C/2, U] - [Y_mu, Y_nu] U| {res:.2e} (<= 1e-6), "
                                    "20 random fields x 4 metrics")
    assert ok


def test_cross_representation_products():
    rng = np.random.default_rng(SEED)
    worst_table = worst_sparse = 0.0
    pairs = 0
    for _ in range(10):
        g = random_metric(rng)
        ctx = CliffordContext(g)
        tet = tetrad_from_metric(g)
        for _ in range(50):
            a, b = (BLADES[i] for i in rng.integers(0, len(BLADES), 2))
            u, v = Multivector.from_dict({a: 1.0}), Multivector.from_dict({b: 1.0})
            oracle = frame_route_mul(tet, u, v)
            direct = Multivector.from_dict(clifford_mul_sparse(ctx.ginv, {a: 1.0}, {b: 1.0}))
            worst_sparse = max(worst_sparse, (direct - oracle).max_abs())
            worst_table = max(worst_table, (ctx.mul(u, v) - oracle).max_abs())
            pairs += 1
    ok = pairs == 500 and max(worst_sparse, worst_table) <= 1e-12
    record("Cross-representation products", ok,
           f"{pairs} blade pairs, recursion vs frame route {worst_sparse:.1e}, "
           f"tabulated vs frame route {worst_table:.1e} (<= 1e-12)")
    assert ok


def test_oracle_agreement():
    details = []
    ok = True
    for name in ALL:
        spec = builtin(name)
        g_err = r_err = 0.0
        for x in sample_points(spec, 50, SplitMix64(SEED).child(7)):
            geo = geometry_at(spec, x)
            g_err = max(g_err, relative_error(geo.gamma, christoffel_fd(spec, x, h=1e-5)))
            r_err = max(r_err, relative_error(geo.riemann, riemann_fd(spec, x)))
        ok &= g_err <= 1e-5 and r_err <= 1e-5
        details.append(f"{name} Gamma {g_err:.1e} R {r_err:.1e}")
    record("Oracle agreement", ok, "; ".join(details) + " (relative, <= 1e-5, 50 points each)")
    assert ok


def test_frame_covariance():
    suites = ("eq3", "eq2", "eq1", "proof", "grade")
    config = RunConfig(points=10, seed=SEED, suites=suites)
    failures = 0
    worst_by = dict.fromkeys(suites, 0.0)
    metrics = resolve_metrics(ALL, {})
    for rot in random_rotations(5, SEED):
        for sel, spec in metrics:
            sec = verify_metric(sel, spec, config, rotation=rot)
            failures += not sec["pass"]
            for s in suites:
                for n in identity_names(s):
                    worst_by[s] = max(worst_by[s], sec["identities"][n]["residual"])
    ok = failures == 0
    record("Frame covariance", ok, "5 random rotations x 4 metrics x 10 points, worst: "
           + ", ".join(f"{s} {v:.1e}" for s, v in worst_by.items()) + " (default tolerances)")
    assert ok


def test_full_verify_runtime_and_reproducibility(tmp_path, capsys):
    paths = [tmp_path / "a.json", tmp_path / "b.json"]
    start = time.perf_counter()
    code = main(["verify", "--metric", "all", "--points", str(POINTS), "--seed", str(SEED),
                 "--report", str(paths[0])])
    secs = time.perf_counter() - start
    code2 = main(["verify", "--metric", "all", "--points", str(POINTS), "--seed", str(SEED),
                  "--report", str(paths[1])])
    capsys.readouterr()
    same = paths[0].read_bytes() == paths[1].read_bytes()
    ok = code == 0 and code2 == 0 and secs < 60.0 and same
    record("Full verify run", ok, f"all builtins x {POINTS} points in {secs:.1f} s (< 60 s), "
                                  f"exit {code}, byte-identical rerun: {same}")
    assert ok


@pytest.fixture(scope="module", autouse=True)
def _publish():
    yield
    import conftest
    conftest.ACCEPTANCE_LINES.extend(VERDICTS)
