import json
from pathlib import Path

import numpy as np
import pytest

from nldiff.cli import EXIT_CONFIG, EXIT_MISMATCH, EXIT_NUMERICAL, EXIT_OK, main
from nldiff.config import load_config
from nldiff.errors import ConfigError
from nldiff.scenarios import run_scenario, run_suite

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"
CONST_CIRCLE = CONFIG_DIR / "const_circle.toml"

SMALL_LINE = """
name = "small_line"

[model]
kernel = "exp(-(x - y)^2/2) / sqrt(2*pi)"
a = "1 + abs(x)"
a_inf = 1.0
a_sup = 7.0
a_inf_attained_at = 0.0
lipschitz = 1.0
symmetric = true
expected = "eigenvalue_exists"

[model.domain]
shape = "truncated_line"
half_width = 6.0

[grid]
n = 121

[dynamics]
t_end = 8.0
dt = 0.02
"""

MISDECLARED = """
name = "misdeclared"

[model]
kernel = "1"
a = "2 + x"
a_inf = 2.0
a_sup = 2.5
symmetric = true
expected = "eigenvalue_exists"

[model.domain]
shape = "interval"
lo = 0.0
hi = 1.0

[grid]
n = 32

[dynamics]
t_end = 4.0
dt = 0.05
"""


def _cfg(tmp_path, text, name):
    p = tmp_path / f"{name}.toml"
    p.write_text(text)
    return p


def test_run_scenario_const_circle(tmp_path):
    report = run_scenario(load_config(CONST_CIRCLE), out_dir=tmp_path)
    assert report.verdict == "reproduced"
    assert report.lambda0 == pytest.approx(0.5, abs=1e-9)
    assert report.rate == pytest.approx(0.5, abs=1e-4)
    assert report.curve_monotone and report.upper_bound_holds
    assert report.certificates_sound
    assert report.max_principle_equivalent
    assert report.resolvent_agrees
    out = tmp_path / "const_circle"
    for fname in ("curve.csv", "eigenfunction.csv", "eigen.json",
                  "trajectory.csv", "report.json"):
        assert (out / fname).exists(), fname
    payload = json.loads((out / "report.json").read_text())
    assert payload["verdict"] == "reproduced"


def test_run_scenario_truncation_sweep(tmp_path):
    cfg = load_config(_cfg(tmp_path, SMALL_LINE, "small_line"))
    report = run_scenario(cfg, out_dir=tmp_path)
    assert report.verdict == "reproduced"
    sweep = report.truncation_sweep
    assert sweep is not None
    assert sweep["R2"] == 2 * sweep["R"]
    # coarse demo grid: the sweep quantifies a small but visible shift
    assert sweep["delta"] < 1e-2


def test_run_scenario_validation_failure_is_mismatch(tmp_path):
    cfg = load_config(_cfg(tmp_path, MISDECLARED, "misdeclared"))
    report = run_scenario(cfg, out_dir=tmp_path)
    assert report.validation_violations
    assert report.verdict == "mismatch"


def test_scenario_outputs_deterministic(tmp_path):
    cfg = load_config(CONST_CIRCLE)
    run_scenario(cfg, out_dir=tmp_path / "a")
    run_scenario(cfg, out_dir=tmp_path / "b")
    for fname in ("curve.csv", "eigenfunction.csv", "trajectory.csv", "report.json"):
        fa = (tmp_path / "a" / "const_circle" / fname).read_bytes()
        fb = (tmp_path / "b" / "const_circle" / fname).read_bytes()
        assert fa == fb, fname


def test_run_suite_mixed_verdicts(tmp_path):
    paths = [CONST_CIRCLE, _cfg(tmp_path, MISDECLARED, "misdeclared")]
    reports, table, code = run_suite(paths, out_dir=tmp_path / "out")
    assert code == 3
    assert {r.verdict for r in reports} == {"reproduced", "mismatch"}
    assert "const_circle" in table and "misdeclared" in table


def test_run_suite_aborts_on_corrupted_config(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("[model\n")
    with pytest.raises(ConfigError):
        run_suite([CONST_CIRCLE, bad])
    with pytest.raises(ConfigError):
        run_suite([])


# --- CLI -------------------------------------------------------------------

def test_cli_validate(capsys):
    code = main(["validate", str(CONST_CIRCLE), "--json"])
    assert code == EXIT_OK
    payload = json.loads(capsys.readouterr().out)
    assert payload["ok"] is True


def test_cli_sweep_solve_simulate_verify(tmp_path, capsys):
    for sub in ("sweep", "solve", "simulate", "verify"):
        code = main([sub, str(CONST_CIRCLE), "--out", str(tmp_path)])
        assert code == EXIT_OK, sub
    assert (tmp_path / "const_circle_curve.csv").exists()
    assert (tmp_path / "const_circle_eigen.json").exists()
    assert (tmp_path / "const_circle_trajectory.csv").exists()
    assert (tmp_path / "const_circle_verify.json").exists()
    payload = json.loads((tmp_path / "const_circle_eigen.json").read_text())
    assert payload["lambda0"] == pytest.approx(0.5, abs=1e-9)


def test_cli_scenario_json_and_dump_matrix(tmp_path, capsys):
    code = main(["scenario", str(CONST_CIRCLE), "--out", str(tmp_path),
                 "--json", "--dump-matrix"])
    assert code == EXIT_OK
    payload = json.loads(capsys.readouterr().out)
    assert payload["verdict"] == "reproduced"
    M = np.loadtxt(tmp_path / "const_circle" / "J_matrix.csv", delimiter=",")
    assert M.shape == (64, 64)
    assert np.allclose(M, (2 * np.pi / 64) / (2 * np.pi))


def test_cli_config_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text("[model\n")
    assert main(["scenario", str(bad)]) == EXIT_CONFIG
    assert main(["scenario", str(tmp_path / "missing.toml")]) == EXIT_CONFIG


def test_cli_numerical_failure_exit_code(tmp_path, capsys):
    # solving a model with no certified condition is a numerical failure
    cfg = CONFIG_DIR / "counterexample_hoelder.toml"
    assert main(["solve", str(cfg), "--out", str(tmp_path)]) == EXIT_NUMERICAL


def test_cli_mismatch_exit_code(tmp_path, capsys):
    p = _cfg(tmp_path, MISDECLARED, "misdeclared")
    assert main(["validate", str(p)]) == EXIT_MISMATCH


def test_cli_suite(tmp_path, capsys):
    d = tmp_path / "configs"
    d.mkdir()
    (d / "const_circle.toml").write_text(CONST_CIRCLE.read_text())
    code = main(["suite", str(d), "--out", str(tmp_path / "out")])
    assert code == EXIT_OK
    assert "const_circle" in capsys.readouterr().out
    assert main(["suite", str(tmp_path / "empty_missing")]) == EXIT_CONFIG
