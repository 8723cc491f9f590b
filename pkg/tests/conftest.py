import time

import numpy as np
import pytest

from stefan_track import (
    PhysicalParams,
    ReferenceParams,
    ReferenceTrajectory,
    initialize,
    reference_temperature,
    run,
)
from stefan_track.config import parse_config
from stefan_track.controller import FeedforwardFlux
from stefan_track.planner import SeriesPlanner
from stefan_track.runner import simulate


@pytest.fixture(scope="session")
def phys():
    return PhysicalParams.from_material()


@pytest.fixture(scope="session")
def ref_params():
    return ReferenceParams(
        omega=0.002, delta1=4.0e-4, delta2=4.0e-3, v_min=7.0e-7,
        s_r0=0.11, s_bar=0.15, L=0.2,
    )


@pytest.fixture(scope="session")
def ref(ref_params):
    return ReferenceTrajectory.from_params(ref_params)


@pytest.fixture(scope="session")
def planner(phys, ref):
    return SeriesPlanner(phys, ref, N=30)


@pytest.fixture(scope="session")
def baseline_cfg():
    return parse_config(None)


@pytest.fixture(scope="session")
def closedloop(baseline_cfg):
    """Full closed-loop baseline run with its wall-clock time."""
    t0 = time.perf_counter()
    outcome = simulate(baseline_cfg, closed_loop=True)
    return outcome, time.perf_counter() - t0


@pytest.fixture(scope="session")
def feedforward(baseline_cfg):
    """Full feedforward-only baseline run (interface starts at 0.1 m)."""
    return simulate(baseline_cfg, closed_loop=False)


def selfconsistency_error(planner, n_grid, dt, horizon=6000.0):
    """Feedforward run from the reference's own initial data; returns
    the worst interface deviation from the reference trajectory."""
    from stefan_track.solver import SolverConfig

    phys = planner.phys
    ref = planner.ref
    cfg = SolverConfig(n_grid=n_grid, dt=dt, theta=0.5, s_floor=ref.s_r0 / 2)
    n_steps = int(round(horizon / dt))
    q_mid = planner.signals(np.arange(n_steps + 1) * dt + 0.5 * dt).q_ff
    plan0 = planner.plan_at(0.0)
    state0 = initialize(
        phys, cfg, ref.s_r0, ref.velocity(0.0),
        lambda x: reference_temperature(plan0, x).value,
    )
    result = run(
        phys, cfg, state0, FeedforwardFlux(q_mid, dt), horizon, log_every=20,
        record_fn=lambda t, st, q: abs(st.s - ref.position(t)),
    )
    assert result.completed
    return max(result.records)


@pytest.fixture(scope="session")
def p2_errors(planner):
    coarse = selfconsistency_error(planner, n_grid=200, dt=0.05)
    fine = selfconsistency_error(planner, n_grid=401, dt=0.025)
    return coarse, fine
