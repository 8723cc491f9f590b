import math

import numpy as np
import pytest

from stefan_track.diagnostics import (
    TrajectoryRecord,
    energy_decay_residual,
    fit_decay_rate,
    fit_energy_decay,
    parse_plan,
    parse_records,
    tracking_functional,
    write_plan,
    write_records,
)
from stefan_track.planner import PhysicalParams, SeriesPlanner, reference_temperature
from stefan_track.solver import SimState


def state_from_plan(plan, n_nodes=101, s=None, sdot=None, temp_offset=0.0):
    s = plan.s_r if s is None else s
    sdot = plan.sdot_r if sdot is None else sdot
    x = np.linspace(0.0, 1.0, n_nodes) * s
    temp = reference_temperature(plan, x - (s - plan.s_r)).value + temp_offset
    return SimState(t=plan.t, s=s, sdot=sdot, temp=np.asarray(temp))


def test_phi_zero_on_reference(planner):
    plan = planner.plan_at(900.0)
    assert tracking_functional(state_from_plan(plan), plan) == 0.0


def test_phi_interface_gap_enters_squared(planner):
    plan = planner.plan_at(900.0)
    state = state_from_plan(plan, s=plan.s_r + 1e-3)
    phi = tracking_functional(state, plan)
    assert phi == pytest.approx(1e-6, rel=1e-9)
    assert phi >= 1e-6


def test_phi_velocity_gap_enters_squared(planner):
    plan = planner.plan_at(900.0)
    state = state_from_plan(plan, sdot=plan.sdot_r + 2e-4)
    assert tracking_functional(state, plan) == pytest.approx(4e-8, rel=1e-9)


def test_phi_invariant_under_common_temperature_shift(ref):
    # Shifting the melting temperature shifts both profiles; only
    # differences enter the functional.
    p0 = PhysicalParams.from_material(T_m=0.0)
    p5 = PhysicalParams.from_material(T_m=5.0)
    pl0 = SeriesPlanner(p0, ref, N=20)
    pl5 = SeriesPlanner(p5, ref, N=20)
    plan0, plan5 = pl0.plan_at(600.0), pl5.plan_at(600.0)
    s, v = plan0.s_r + 5e-4, plan0.sdot_r * 1.5
    st0 = state_from_plan(plan0, s=s, sdot=v, temp_offset=0.3)
    st5 = state_from_plan(plan5, s=s, sdot=v, temp_offset=0.3)
    assert tracking_functional(st0, plan0) == pytest.approx(
        tracking_functional(st5, plan5), rel=1e-12
    )


def test_phi_nan_outside_radius(phys, ref):
    from stefan_track.reference import GevreyCertificate

    cert = GevreyCertificate(M=1e-300, R=4 * ref.s_bar**2 / phys.alpha, d=2.0, m_max=10)
    planner = SeriesPlanner(phys, ref, N=10, cert=cert)
    plan = planner.plan_at(0.0)
    s = 2.2 * plan.radius()
    state = SimState(t=0.0, s=s, sdot=0.0, temp=np.zeros(41))
    assert math.isnan(tracking_functional(state, plan))


def make_records(ts, errs, e_r=30.0):
    return [
        TrajectoryRecord(
            t=t, s=0.1, sdot=1e-5, q_c=100.0, E=e_r + err, E_r=e_r, Phi=1.0,
            T_min=0.0, T_at0=10.0, safe_flux=True, safe_temp=True,
        )
        for t, err in zip(ts, errs)
    ]


def test_energy_decay_residual_exact_exponential():
    t = np.linspace(0.0, 5000.0, 60)
    recs = make_records(t, -3.0 * np.exp(-0.002 * t))
    assert energy_decay_residual(recs, 0.002) == pytest.approx(0.0, abs=1e-14)


def test_energy_decay_residual_scale_invariant():
    t = np.linspace(0.0, 5000.0, 60)
    err = -3.0 * np.exp(-0.002 * t) + 1e-3 * np.sin(t / 500.0)
    r1 = energy_decay_residual(make_records(t, err), 0.002)
    r2 = energy_decay_residual(make_records(t, 7.5 * err, e_r=222.0), 0.002)
    assert r1 == pytest.approx(r2, rel=1e-12)


def test_energy_decay_residual_detects_wrong_gain():
    t = np.linspace(0.0, 3000.0, 50)
    recs = make_records(t, -3.0 * np.exp(-0.002 * t))
    # max |e^(-x) - e^(-2x)| = 1/4, attained at x = ln 2
    assert energy_decay_residual(recs, 0.004) > 0.2


def test_energy_decay_residual_empty_records():
    with pytest.raises(ValueError):
        energy_decay_residual([], 0.002)


def test_fit_decay_rate_exact():
    t = np.linspace(0.0, 2000.0, 40)
    rate, r2 = fit_decay_rate(t, np.exp(-0.003 * t))
    assert rate == pytest.approx(0.003, rel=1e-12)
    assert r2 == pytest.approx(1.0, abs=1e-12)


def test_fit_decay_rate_constant():
    rate, r2 = fit_decay_rate(np.arange(20.0), np.full(20, 2.5))
    assert rate == pytest.approx(0.0, abs=1e-15)


def test_fit_decay_rate_input_validation():
    with pytest.raises(ValueError):
        fit_decay_rate([1.0, 2.0], [1.0, 0.5])
    with pytest.raises(ValueError):
        fit_decay_rate(np.arange(12.0), np.linspace(1.0, -0.1, 12))


def test_fit_energy_decay_summary():
    t = np.linspace(0.0, 5000.0, 120)
    recs = make_records(t, -3.0 * np.exp(-0.002 * t))
    fit = fit_energy_decay(recs, 0.002)
    assert fit["fitted_rate"] == pytest.approx(0.002, rel=1e-9)
    assert fit["residual_max_rel"] < 1e-12
    assert fit["window_end_s"] == pytest.approx(1500.0)


def test_records_roundtrip(tmp_path):
    t = np.linspace(0.0, 100.0, 7)
    recs = make_records(t, -np.exp(-0.002 * t))
    recs[2] = TrajectoryRecord(
        t=recs[2].t, s=recs[2].s, sdot=recs[2].sdot, q_c=recs[2].q_c,
        E=recs[2].E, E_r=float("nan"), Phi=float("nan"), T_min=recs[2].T_min,
        T_at0=recs[2].T_at0, safe_flux=False, safe_temp=True,
    )
    path = tmp_path / "traj.csv"
    write_records(recs, str(path), provenance="config-hash=abc version=test")
    text = path.read_text().splitlines()
    assert text[0].startswith("# config-hash=")
    assert text[1].split(",")[0] == "t_s"
    back = parse_records(str(path))
    assert len(back) == len(recs)
    for a, b in zip(recs, back):
        for field in ("t", "s", "sdot", "q_c", "E", "T_min", "T_at0"):
            va, vb = getattr(a, field), getattr(b, field)
            assert vb == pytest.approx(va, rel=1e-8)
        assert (a.safe_flux, a.safe_temp) == (b.safe_flux, b.safe_temp)
    assert math.isnan(back[2].E_r) and math.isnan(back[2].Phi)


def test_records_empty_list_writes_header_only(tmp_path):
    path = tmp_path / "empty.csv"
    write_records([], str(path))
    lines = path.read_text().splitlines()
    assert lines == ["t_s,s_m,sdot_mps,qc_Wpm2,E,E_r,Phi,T_min_C,T_at0_C,safe_flux,safe_temp"]
    assert parse_records(str(path)) == []


def test_records_parse_rejects_wrong_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(ValueError, match="header"):
        parse_records(str(path))


def test_plan_roundtrip(tmp_path, planner):
    sig = planner.signals(np.linspace(0.0, 600.0, 13))
    path = tmp_path / "plan.csv"
    write_plan(sig, str(path), provenance="config-hash=xyz version=test")
    back = parse_plan(str(path))
    np.testing.assert_allclose(back["t_s"], sig.t, rtol=1e-8)
    np.testing.assert_allclose(back["q_ff_Wpm2"], sig.q_ff, rtol=1e-8)
    np.testing.assert_allclose(back["E_r"], sig.E_r, rtol=1e-8)
