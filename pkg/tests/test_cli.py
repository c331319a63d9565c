import json
import subprocess
import sys

import numpy as np
import pytest

from orps import catalog
from orps.cli import main, parse_sweep, set_path
from orps.errors import ConfigParse
from orps.io import read_trajectory_csv


def run(*args):
    return main(list(args))


def read_json(p):
    return json.loads(p.read_text())


def test_solve_scalar_rho2(tmp_path):
    assert run("solve", "--problem", "scalar-rho2-forced", "--out", str(tmp_path)) == 0
    tr = read_trajectory_csv(tmp_path / "trajectory.csv", 1)
    err = max(abs(y[0] - (1 + t)) / (1 + t) for t, _, y in tr.rows())
    assert err <= 1e-8
    rep = read_json(tmp_path / "report.json")
    assert rep["status"] == "ok" and rep["exit_code"] == 0
    assert rep["certificate"]["C2"] == 2.0


def test_solve_gap_singular(tmp_path):
    assert run("solve", "--problem", "gap-singular", "--out", str(tmp_path)) == 3
    rep = read_json(tmp_path / "report.json")
    assert rep["assumptions"]["failed"] == ["A4"]
    assert not (tmp_path / "trajectory.csv").exists()


def test_solve_force_on_singular_gap_reports_failure(tmp_path):
    assert run("solve", "--problem", "gap-singular", "--out", str(tmp_path), "--force") == 2
    assert read_json(tmp_path / "report.json")["status"] == "singular_gap"


def test_iterate_only_linear_equals_solve(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run("solve", "--problem", "m0", "--out", str(a), "--iterate-only", "1") == 0
    assert run("solve", "--problem", "m0", "--out", str(b)) == 0
    one, full = read_trajectory_csv(a / "trajectory.csv"), read_trajectory_csv(b / "trajectory.csv")
    for t in np.linspace(0, 2, 17):
        np.testing.assert_allclose(one.value(t), full.value(t), rtol=1e-9, atol=1e-10)


def test_solve_semilinear_and_verify_roundtrip(tmp_path):
    assert run("solve", "--problem", "sine-contractive", "--out", str(tmp_path)) == 0
    assert run("verify", "--problem", "sine-contractive", "--out", str(tmp_path)) == 0
    rep = read_json(tmp_path / "verify.json")
    assert rep["validation"]["ok"]


def test_verify_corrupted_jump(tmp_path):
    assert run("solve", "--problem", "scalar-impulse", "--out", str(tmp_path)) == 0
    p = tmp_path / "trajectory.csv"
    p.write_text(p.read_text().replace("0.5,R,3.0", "0.5,R,3.25"))
    assert run("verify", "--problem", "scalar-impulse", "--out", str(tmp_path)) == 2
    assert read_json(tmp_path / "verify.json")["validation"]["bad_jumps"] == [0]


def test_verify_schema_mismatch(tmp_path):
    (tmp_path / "trajectory.csv").write_text("t,y\n0,1\n")
    assert run("verify", "--problem", "scalar-impulse", "--out", str(tmp_path)) == 1
    assert run("verify", "--problem", "scalar-impulse", "--out", str(tmp_path / "missing")) == 1


def test_config_errors_exit_1(tmp_path):
    bad = tmp_path / "c.json"
    bad.write_text('{"schema": 1, "n": 1')
    assert run("solve", "--config", str(bad), "--out", str(tmp_path)) == 1
    assert run("solve", "--out", str(tmp_path)) == 1
    assert run("solve", "--problem", "unknown", "--out", str(tmp_path)) == 1


def test_bounds(tmp_path):
    assert run("bounds", "--problem", "scalar-rho2-forced", "--out", str(tmp_path)) == 0
    rep = read_json(tmp_path / "bounds.json")
    g = rep["general"]
    assert g["bounds"]["C2"] == 2.0
    assert g["numeric"]["integral_max"] == pytest.approx(2.0, rel=1e-12)
    assert g["margin_C2"] == pytest.approx(0.0, abs=1e-12)
    assert rep["commuting"]["bounds"]["C2"] >= 2.0


def test_bounds_m0_and_singular(tmp_path):
    assert run("bounds", "--problem", "m0", "--out", str(tmp_path)) == 0
    assert read_json(tmp_path / "bounds.json")["general"]["bounds"]["C1"] == 0.0
    assert run("bounds", "--problem", "gap-singular", "--out", str(tmp_path)) == 4


def test_bounds_commuting_family(tmp_path):
    assert run("bounds", "--problem", "commuting-family", "--out", str(tmp_path)) == 0
    rep = read_json(tmp_path / "bounds.json")
    assert rep["commuting_applicable"]
    assert "C1" in rep["general"]["bounds"] and "C1" in rep["commuting"]["bounds"]


def test_solve_from_config_file_with_seed(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(catalog.get("scalar-impulse")))
    assert run("solve", "--config", str(p), "--out", str(tmp_path / "o"), "--seed", "7") == 0
    assert read_json(tmp_path / "o" / "report.json")["seed"] == 7


def test_sweep_serial_equals_parallel(tmp_path):
    grid = '{"nonlinearity.params.eps": [0.05, 2.0], "rho_scale": [1.0, 2.0]}'
    assert run("sweep", "--problem", "sine-contractive", "--sweep", grid, "--out", str(tmp_path / "s")) == 0
    assert run("sweep", "--problem", "sine-contractive", "--sweep", grid, "--out", str(tmp_path / "p"),
               "--jobs", "2") == 0
    a = (tmp_path / "s" / "sweep.csv").read_text()
    assert a == (tmp_path / "p" / "sweep.csv").read_text()
    lines = a.splitlines()
    assert lines[0] == "nonlinearity.params.eps,rho_scale,LC2,betaC2,converged,iterations,residual,status"
    assert len(lines) == 5
    assert lines[1].split(",")[4] == "true"


def test_sweep_spec_errors(tmp_path):
    with pytest.raises(ConfigParse):
        parse_sweep("{}")
    with pytest.raises(ConfigParse):
        parse_sweep('{"a": "x"}')
    f = tmp_path / "grid.json"
    f.write_text('{"rho_scale": [1, 2]}')
    assert parse_sweep(str(f)) == {"rho_scale": [1.0, 2.0]}
    assert run("sweep", "--problem", "m0", "--out", str(tmp_path)) == 1


def test_set_path():
    d = {"rho": [[1.0, 0.0], [0.0, 1.0]], "a": {}}
    set_path(d, "rho.1.1", 5.0)
    set_path(d, "a.b.c", 2)
    assert d["rho"][1][1] == 5.0 and d["a"]["b"]["c"] == 2
    with pytest.raises(ConfigParse):
        set_path(d, "rho.9.0", 1.0)


def test_console_script_determinism(tmp_path):
    outs = []
    for k in range(2):
        out = tmp_path / str(k)
        proc = subprocess.run([sys.executable, "-m", "orps.cli", "solve", "--problem", "sine-contractive",
                               "--out", str(out), "--seed", "3"], capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        outs.append(((out / "trajectory.csv").read_bytes(), (out / "report.json").read_bytes()))
    assert outs[0] == outs[1]


def test_catalog_command(capsys):
    assert run("catalog") == 0
    assert "scalar-rho2-forced" in capsys.readouterr().out
