from __future__ import annotations

import json
import subprocess
import sys

import pytest

from cliffgauge.cli import main, metrics_listing, parse_point
from cliffgauge.expr import ParseError
from cliffgauge.geometry import builtin
from cliffgauge.verify import RunConfig, ConfigError, resolve_metrics, run, sample_points, streams

BROKEN = "coords: t x y z\ng 0 0: 1\ng 1 1: 1\ng 2 2: -1\ng 3 3: -1\n"


def run_cli(capsys, *args):
    code = main(list(args))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_verify_minkowski_all_zero(capsys):
    code, out, _ = run_cli(capsys, "verify", "--metric", "minkowski", "--points", "10", "--seed", "1")
    assert code == 0
    report = json.loads(out)
    assert report["schema"] == 1
    sec = report["metrics"]["minkowski"]
    assert all(i["residual"] <= 1e-14 and i["pass"] for i in sec["identities"].values())
    assert sec["best_fit_ratio"] is None


def test_verify_schwarzschild_with_param(capsys, tmp_path):
    path = tmp_path / "r.json"
    code, out, _ = run_cli(capsys, "verify", "--metric", "schwarzschild", "--param", "M=1",
                           "--points", "10", "--seed", "42", "--report", str(path))
    assert code == 0 and "PASS" in out
    report = json.loads(path.read_text())
    eq1 = report["metrics"]["schwarzschild"]["identities"]["eq1"]
    assert eq1["residual"] <= 1e-6
    assert set(eq1["worst_point"]) == {"t", "r", "theta", "phi"}


def test_broken_signature_file_exits_2(capsys, tmp_path):
    path = tmp_path / "broken.metric"
    path.write_text(BROKEN)
    code, _, err = run_cli(capsys, "verify", "--metric", f"file:{path}")
    assert code == 2
    assert "signature" in err


def test_identity_failure_exits_1_and_still_writes_report(capsys, tmp_path):
    path = tmp_path / "fail.json"
    code, _, _ = run_cli(capsys, "verify", "--metric", "schwarzschild", "--points", "2",
                         "--tol-eq3", "1e-30", "--report", str(path))
    assert code == 1
    report = json.loads(path.read_text())
    assert report["pass"] is False
    assert report["metrics"]["schwarzschild"]["identities"]["eq1"]["pass"] is True


@pytest.mark.parametrize("args", [
    ["verify", "--metric", "kerr"],
    ["verify", "--metric", "minkowski", "--param", "M=2"],
    ["verify", "--metric", "minkowski", "--points", "0"],
    ["verify", "--metric", "minkowski", "--tol-eq1", "-1"],
    ["verify", "--metric", "file:/nonexistent/x.metric"],
    ["verify", "--bogus"],
    ["check-point", "--metric", "schwarzschild", "--point", "t=0,r=2,theta=1,phi=0"],
])
def test_config_errors_exit_2(capsys, args):
    assert run_cli(capsys, *args)[0] == 2


def test_json_reports_byte_identical(tmp_path, capsys):
    paths = [tmp_path / "a.json", tmp_path / "b.json"]
    for p in paths:
        run_cli(capsys, "verify", "--metric", "all", "--points", "3", "--seed", "5", "--report", str(p))
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_text_format(capsys):
    code, out, _ = run_cli(capsys, "verify", "--metric", "flrw-exp", "--points", "2", "--format", "text")
    assert code == 0
    assert "flrw-exp: PASS" in out and "best-fit F:C ratio 0.5000" in out


def test_timing_is_opt_in(capsys):
    _, out, _ = run_cli(capsys, "verify", "--metric", "minkowski", "--points", "1")
    assert "wall_time_s" not in json.loads(out)
    _, out, _ = run_cli(capsys, "verify", "--metric", "minkowski", "--points", "1", "--timing")
    assert json.loads(out)["wall_time_s"] >= 0


def test_check_point_minkowski_origin(capsys):
    code, out, _ = run_cli(capsys, "check-point", "--metric", "minkowski",
                           "--point", "t=0,x=0,y=0,z=0", "--format", "json")
    assert code == 0
    dump = json.loads(out)
    assert all(b == {} for b in dump["B"].values())
    assert list(dump) == ["metric", "point", "g", "christoffel", "tetrad", "H", "I", "K",
                          "B", "F", "half_C", "residuals"]


def test_check_point_schwarzschild(capsys):
    code, out, _ = run_cli(capsys, "check-point", "--metric", "schwarzschild",
                           "--point", "t=0,r=6,theta=1.0,phi=0.5", "--format", "json")
    assert code == 0
    dump = json.loads(out)
    assert dump["residuals"]["eq1"] <= 1e-6
    assert list(dump["F"]) == ["t,r", "t,theta", "t,phi", "r,theta", "r,phi", "theta,phi"]
    assert dump["F"]["t,r"]["dx01"] == pytest.approx(dump["half_C"]["t,r"]["dx01"], rel=1e-10)
    code, text, _ = run_cli(capsys, "check-point", "--metric", "schwarzschild",
                            "--point", "t=0,r=6,theta=1.0,phi=0.5")
    assert "residuals:" in text and "half_C:" in text


def test_malformed_point_literal_reports_offset(capsys):
    code, _, err = run_cli(capsys, "check-point", "--metric", "schwarzschild",
                           "--point", "t=0,r=6,theta=1.0+,phi=0.5")
    assert code == 2 and "offset 18" in err


@pytest.mark.parametrize("text, offset", [
    ("t=0,r=6,theta=1.0+,phi=0.5", 18),
    ("t=0,q=6,theta=1,phi=0", 4),
    ("t=0,r=6,theta=1", 15),
    ("t=0,r 6,theta=1,phi=0", 7),
    ("t=0,r=6,theta=1,phi=0,t=1", 22),
])
def test_parse_point_offsets(text, offset):
    with pytest.raises(ParseError) as err:
        parse_point(text, builtin("schwarzschild"))
    assert err.value.offset == offset


def test_parse_point_accepts_expressions():
    x = parse_point("t=0, r=3*M + 1, theta=pi/2, phi=0.5", builtin("schwarzschild"))
    assert list(x) == pytest.approx([0.0, 4.0, 1.5707963267948966, 0.5])


def test_metrics_listing(capsys):
    code, out, _ = run_cli(capsys, "metrics")
    assert code == 0
    assert "minkowski" in out and "r > 3M" in out
    assert out == metrics_listing() == metrics_listing()


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "cliffgauge", "metrics"], capture_output=True, text=True)
    assert res.returncode == 0 and "schwarzschild" in res.stdout


def test_sampling_independent_of_selection():
    spec = builtin("de-sitter")
    alone = sample_points(spec, 5, streams(3, "de-sitter")[0])
    report = run(RunConfig(metrics=("all",), points=5, seed=3, suites=("eq3",)))
    worst = report["metrics"]["de-sitter"]["identities"]["eq3:H^2=1"]["worst_point"]
    assert any(list(worst.values()) == list(p) for p in alone)
    for p in alone:
        assert all(lo < xi < hi for xi, (lo, hi) in zip(p, spec.domain))


def test_param_routing():
    metrics = dict(resolve_metrics(["all"], {"M": 2.0}))
    assert metrics["schwarzschild"].params == {"M": 2.0}
    with pytest.raises(ConfigError):
        resolve_metrics(["flrw-exp"], {"M": 2.0})
    with pytest.raises(ConfigError):
        RunConfig(tolerances={"eq9": 1.0})
