"""Scenario orchestration: pre-flight checks and full simulation runs.

Composes the planner, solver, controller, and diagnostics into the runs
the command line exposes; kept separate so tests can drive scenarios
without a subprocess.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ScenarioConfig
from .controller import (
    EnergyWindowReport,
    FeedforwardFlux,
    TrackingFlux,
    check_energy_window,
    safety_monitor,
)
from .diagnostics import TrajectoryRecord, tracking_functional
from .planner import (
    ConvergenceReport,
    SeriesPlanner,
    TemperatureValidityReport,
    check_convergence,
    check_reference_temperature,
    reference_temperature,
)
from .reference import AdmissibilityReport, check_admissibility
from .solver import energy, initialize, run

__all__ = ["SafetySummary", "SimOutcome", "PreflightReport", "preflight", "simulate"]


@dataclass(frozen=True)
class SafetySummary:
    """Violation counts over the logged steps of one run."""

    n_records: int
    flux_violations: int
    temp_violations: int
    sdot_violations: int
    band_violations: int

    @property
    def clean(self) -> bool:
        return (
            self.flux_violations == 0
            and self.temp_violations == 0
            and self.sdot_violations == 0
            and self.band_violations == 0
        )


@dataclass(frozen=True)
class PreflightReport:
    """All checkable admissibility conditions for a scenario."""

    admissibility: AdmissibilityReport
    convergence: ConvergenceReport
    temp_validity: TemperatureValidityReport
    energy_window: EnergyWindowReport

    @property
    def all_ok(self) -> bool:
        return (
            self.admissibility.all_ok
            and self.convergence.converges
            and self.convergence.envelope_ok
            and self.temp_validity.ok
            and self.energy_window.all_ok
        )


@dataclass(frozen=True)
class SimOutcome:
    records: list[TrajectoryRecord]
    status: str
    safety: SafetySummary
    field_rows: list[tuple]
    E0: float

    @property
    def completed(self) -> bool:
        return self.status == "completed"


def preflight(cfg: ScenarioConfig, planner: SeriesPlanner | None = None) -> PreflightReport:
    """Run every pre-flight check for the configured scenario."""
    if planner is None:
        planner = cfg.planner()
    ref = planner.ref
    state0 = initialize(cfg.phys, cfg.solver, cfg.s0, cfg.v0, cfg.initial_profile())
    e0 = energy(state0, cfg.phys)
    return PreflightReport(
        admissibility=check_admissibility(ref, cfg.phys.L, cfg.horizon),
        convergence=check_convergence(planner, horizon=cfg.horizon),
        temp_validity=check_reference_temperature(planner, cfg.horizon),
        energy_window=check_energy_window(
            e0, planner, cfg.control.c, cfg.horizon, cfg.preflight_samples
        ),
    )


def _field_steps(n_steps: int, dt: float, required_times, max_slices: int = 200) -> set[int]:
    required = {
        int(round(t / dt)) for t in required_times if 0 <= round(t / dt) <= n_steps
    }
    budget = max_slices - len(required) - 1
    stride = max(1, -(-(n_steps + 1) // budget))
    steps = set(range(0, n_steps + 1, stride)) | {n_steps} | required
    if len(steps) > max_slices:
        uniform = sorted(steps - required)[: max_slices - len(required)]
        steps = set(uniform) | required
    return steps


def simulate(cfg: ScenarioConfig, closed_loop: bool, dump_field: bool = False) -> SimOutcome:
    """Run the scenario under tracking control or pure feedforward."""
    phys = cfg.phys
    planner = cfg.planner()
    ref = planner.ref
    dt = cfg.solver.dt
    n_steps = int(round(cfg.horizon / dt))
    signals = planner.signals(np.arange(n_steps + 1) * dt)
    # The flux applied over a step is sampled at the step midpoint, the
    # second-order-consistent representation of the interval input.
    q_ff_mid = planner.signals(np.arange(n_steps + 1) * dt + 0.5 * dt).q_ff

    state0 = initialize(phys, cfg.solver, cfg.s0, cfg.v0, cfg.initial_profile())
    e0 = energy(state0, phys)

    if closed_loop:
        flux_fn = TrackingFlux(q_ff_mid, signals.E_r, dt, cfg.control.c, phys)
    else:
        flux_fn = FeedforwardFlux(q_ff_mid, dt)

    log_steps = set(range(0, n_steps + 1, cfg.log_every)) | {n_steps}
    field_steps = _field_steps(n_steps, dt, cfg.field_times) if dump_field else set()
    node_stride = max(1, -(-state0.temp.size // 200))  # ceil: at most ~200 nodes dumped
    field_rows: list[tuple] = []
    counts = {"flux": 0, "temp": 0, "sdot": 0, "band": 0}

    def record_fn(t: float, state, q_c: float):
        idx = int(round(t / dt))
        plan = planner.plan_at(t)
        if idx in field_steps:
            x = np.linspace(0.0, 1.0, state.temp.size) * state.s
            sel = list(range(0, state.temp.size, node_stride))
            if sel[-1] != state.temp.size - 1:
                sel.append(state.temp.size - 1)
            try:
                t_ref = np.asarray(reference_temperature(plan, x[sel]).value)
            except Exception:
                t_ref = np.full(len(sel), np.nan)
            for j, i in enumerate(sel):
                field_rows.append((t, float(x[i]), float(state.temp[i]), float(t_ref[j])))
        if idx not in log_steps:
            return None
        e = energy(state, phys)
        phi = tracking_functional(state, plan)
        flags = safety_monitor(state, q_c, phys, ref, cfg.s0)
        counts["flux"] += not flags.flux_nonneg
        counts["temp"] += not flags.temp_valid
        counts["sdot"] += not flags.sdot_nonneg
        counts["band"] += not flags.interface_band
        return TrajectoryRecord(
            t=t,
            s=state.s,
            sdot=state.sdot,
            q_c=q_c,
            E=e,
            E_r=float(signals.E_r[idx]),
            Phi=phi,
            T_min=float(np.min(state.temp)),
            T_at0=float(state.temp[0]),
            safe_flux=flags.flux_nonneg,
            safe_temp=flags.temp_valid,
        )

    result = run(
        phys,
        cfg.solver,
        state0,
        flux_fn,
        cfg.horizon,
        record_fn=record_fn,
        record_steps=log_steps | field_steps,
    )
    records = [r for r in result.records if r is not None]

    safety = SafetySummary(
        n_records=len(records),
        flux_violations=counts["flux"],
        temp_violations=counts["temp"],
        sdot_violations=counts["sdot"],
        band_violations=counts["band"],
    )
    return SimOutcome(
        records=records,
        status=result.status,
        safety=safety,
        field_rows=field_rows,
        E0=e0,
    )
