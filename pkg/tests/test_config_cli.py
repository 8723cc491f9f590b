import subprocess
import sys

import numpy as np
import pytest

from stefan_track.config import config_hash, parse_config
from stefan_track.errors import ParameterError

FAST = ["--set", "solver.n_grid=64", "--set", "solver.dt=0.2", "--set", "run.log_every=50"]
GENTLE = ["--set", "reference.v_min=4e-6", "--set", "reference.delta2=4e-4"]


def cli(*args, cwd=None):
    return subprocess.run(
        [sys.executable, "-m", "stefan_track.cli", *args],
        capture_output=True, text=True, cwd=cwd,
    )


def test_defaults_are_baseline_scenario():
    cfg = parse_config(None)
    assert cfg.phys.epsilon == 10.0
    assert cfg.s0 == 0.1
    assert cfg.control.c == 0.002
    assert cfg.ref_params.omega == 0.002
    assert cfg.ref_params.v_min == 7.0e-7
    assert cfg.ref_params.delta1 == 4.0e-4
    assert cfg.ref_params.delta2 == 4.0e-3
    assert cfg.ref_params.s_r0 == 0.11
    assert cfg.ref_params.s_bar == 0.15
    assert cfg.phys.alpha == pytest.approx(4.532e-5, rel=1e-3)
    assert cfg.phys.beta == pytest.approx(1.577e-7, rel=1e-3)


def test_empty_file_equals_defaults(tmp_path):
    p = tmp_path / "empty.toml"
    p.write_text("")
    assert parse_config(str(p)).raw == parse_config(None).raw


def test_unknown_key_rejected(tmp_path):
    p = tmp_path / "bad.toml"
    p.write_text("[solver]\nn_gird = 100\n")
    with pytest.raises(ParameterError, match="n_gird"):
        parse_config(str(p))


def test_unknown_section_rejected(tmp_path):
    p = tmp_path / "bad.toml"
    p.write_text("[slover]\nn_grid = 100\n")
    with pytest.raises(ParameterError, match="slover"):
        parse_config(str(p))


def test_reference_exceeding_domain_rejected():
    with pytest.raises(ParameterError, match="s_bar < L"):
        parse_config(None, ["reference.s_final=0.25"])


def test_zero_gain_rejected():
    with pytest.raises(ParameterError, match="gain c"):
        parse_config(None, ["controller.gain=0.0"])


def test_overrides_apply_types():
    cfg = parse_config(None, ["solver.n_grid=96", "run.t0_kind='uniform'", "solver.dt=0.1"])
    assert cfg.solver.n_grid == 96
    assert cfg.t0_kind == "uniform"
    assert cfg.solver.dt == 0.1


def test_override_syntax_errors():
    with pytest.raises(ParameterError):
        parse_config(None, ["solver.n_grid"])
    with pytest.raises(ParameterError):
        parse_config(None, ["nope.key=1"])


def test_config_hash_tracks_content():
    a = parse_config(None)
    b = parse_config(None, ["solver.dt=0.1"])
    assert config_hash(a.raw) != config_hash(b.raw)
    assert config_hash(a.raw) == config_hash(parse_config(None).raw)
    assert len(config_hash(a.raw)) == 12


def test_physical_overrides_alpha_beta():
    cfg = parse_config(None, ["physical.diffusivity=5e-5", "physical.stefan_coeff=2e-7"])
    assert cfg.phys.alpha == 5e-5
    assert cfg.phys.beta == 2e-7


def test_cli_plan_mode(tmp_path):
    r = cli("plan", "--out", str(tmp_path), "--set", "run.horizon=600")
    assert r.returncode == 0, r.stderr
    assert "amplitude_A" in r.stdout and "1.534" in r.stdout
    lines = (tmp_path / "plan.csv").read_text().splitlines()
    assert lines[0].startswith("# config-hash=")
    assert lines[1] == "t_s,s_r_m,sdot_r_mps,q_ff_Wpm2,E_r"
    assert len(lines) > 10


def test_cli_usage_error_exits_one(tmp_path):
    assert cli("no-such-mode").returncode == 1
    assert cli("plan", "--set", "controller.gain=0", "--out", str(tmp_path)).returncode == 1
    assert cli("plan", "--config", "/does/not/exist.toml", "--out", str(tmp_path)).returncode == 1


def test_cli_check_safety_baseline_fails_full_horizon(tmp_path):
    # The baseline scenario is not certifiable over the full 100 min (see
    # the decisions ledger): the pre-flight must exit 2 and say why.
    r = cli("check-safety", "--out", str(tmp_path))
    assert r.returncode == 2, r.stdout + r.stderr
    report = (tmp_path / "safety_report.txt").read_text()
    assert "energy_window.flux_pass: FAIL" in report
    assert "series_temperature.pass: FAIL" in report
    assert "preflight.overall: FAIL" in report


def test_cli_check_safety_certified_variant(tmp_path):
    r = cli("check-safety", "--out", str(tmp_path), *GENTLE)
    assert r.returncode == 0, r.stdout + r.stderr
    report = (tmp_path / "safety_report.txt").read_text()
    assert "preflight.overall: pass" in report


def test_cli_closedloop_certified_variant_clean(tmp_path):
    r = cli("simulate-closedloop", "--out", str(tmp_path), *FAST, *GENTLE)
    assert r.returncode == 0, r.stdout + r.stderr
    report = (tmp_path / "safety_report.txt").read_text()
    assert "runtime.flux_violations: 0" in report
    assert (tmp_path / "trajectory.csv").exists()
    assert (tmp_path / "decay_fit.txt").exists()


def test_cli_closedloop_baseline_flags_runtime_violations(tmp_path):
    r = cli("simulate-closedloop", "--out", str(tmp_path), *FAST)
    assert r.returncode == 3, r.stdout + r.stderr
    report = (tmp_path / "safety_report.txt").read_text()
    assert "runtime.flux_violations: 0" not in report


def test_cli_feedforward_reports_but_exits_zero(tmp_path):
    r = cli("simulate-feedforward", "--out", str(tmp_path), *FAST)
    assert r.returncode == 0, r.stdout + r.stderr
    report = (tmp_path / "safety_report.txt").read_text()
    line = [l for l in report.splitlines() if l.startswith("runtime.flux_violations")][0]
    assert int(line.split(":")[1]) > 0


def test_cli_field_dump(tmp_path):
    r = cli(
        "simulate-closedloop", "--out", str(tmp_path), "--dump-field",
        *FAST, "--set", "run.horizon=1200", "--set", "run.field_times=[3.0, 60.0, 600.0]",
    )
    assert r.returncode == 0, r.stdout + r.stderr
    lines = (tmp_path / "field.csv").read_text().splitlines()
    assert lines[1] == "t_s,x_m,T_C,T_ref_C"
    data = np.array([[float(v) for v in l.split(",")] for l in lines[2:]])
    times = np.unique(data[:, 0])
    assert len(times) <= 200
    for want in (3.0, 60.0, 600.0):
        assert np.min(np.abs(times - want)) < 0.11


def test_cli_deterministic_outputs(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    args = ["simulate-closedloop", *FAST, "--set", "run.horizon=600"]
    assert cli(*args, "--out", str(a)).returncode == 0
    assert cli(*args, "--out", str(b)).returncode == 0
    assert (a / "trajectory.csv").read_bytes() == (b / "trajectory.csv").read_bytes()
    assert (a / "plan.csv").read_bytes() == (b / "plan.csv").read_bytes()


def test_cli_verify_mode(tmp_path):
    r = cli("verify", "--out", str(tmp_path))
    assert r.returncode == 0, r.stdout + r.stderr
    assert "FAIL" not in r.stdout
    assert r.stdout.count("PASS") >= 7
