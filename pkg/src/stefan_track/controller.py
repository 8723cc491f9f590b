"""Energy-shaping tracking control and safety monitoring.

The control law shapes the total energy toward the reference energy:

    q_c(t) = q_ff(t) - c * (k/alpha) * (E(t) - E_ref(t)).

Energies integrate superheat (K m), so the error is converted to flux
units by k/alpha, the inverse of the conservation factor
dE/dt = (alpha/k) q_c.  Substituting the law into the conservation law
gives the exactly solvable error dynamics
d(E - E_ref)/dt = -c (E - E_ref).

Safety rests on the boundary flux staying non-negative, which a
pre-flight window check on the initial energy certifies over the run
horizon; at runtime a monitor records (not enforces) the flux,
temperature, interface-velocity, and interface-band conditions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .planner import PhysicalParams, SeriesPlanner, TOL_T
from .reference import ReferenceTrajectory
from .solver import SimState, energy

__all__ = [
    "ControllerConfig",
    "SafetyFlags",
    "EnergyWindowReport",
    "control_flux",
    "check_energy_window",
    "safety_monitor",
    "TrackingFlux",
    "FeedforwardFlux",
]

#: Flux slack for the strict non-negativity check, W/m^2.
TOL_Q = 1e-12
#: Interface-band slack, m.
TOL_S = 1e-6


@dataclass(frozen=True)
class ControllerConfig:
    """Gain of the energy-shaping law."""

    c: float  # 1/s

    def __post_init__(self):
        if self.c <= 0:
            raise ParameterError("controller gain c must be > 0")


def control_flux(t: float, E: float, E_r: float, q_ff: float, c: float, phys: PhysicalParams) -> float:
    """Tracking flux: feedforward minus the energy error in flux units."""
    return q_ff - c * (phys.k / phys.alpha) * (E - E_r)


@dataclass(frozen=True)
class EnergyWindowReport:
    """Pre-flight initial-energy window check over the run horizon.

    ``flux_margin`` is the minimum over samples of
    ``E_r(0) + (alpha/k) q_ff(t) e^(ct) / c - E(0)`` (must be >= 0 for
    the closed-loop flux to stay non-negative); ``headroom_margin`` is
    the minimum of ``(alpha/beta) s_bar - E_r(t) - (E(0)-E_r(0)) e^(-ct)``
    (must be > 0 for the interface to stay below its target).
    """

    E0: float
    E_r0: float
    flux_margin: float
    flux_margin_time: float
    flux_ok: bool
    headroom_margin: float
    headroom_margin_time: float
    headroom_ok: bool
    horizon: float
    samples: int

    @property
    def all_ok(self) -> bool:
        return self.flux_ok and self.headroom_ok


def check_energy_window(
    E0: float,
    planner: SeriesPlanner,
    c: float,
    horizon: float,
    samples: int = 10_000,
) -> EnergyWindowReport:
    """Evaluate the initial-energy window conditions on a sampled horizon.

    The exponential amplification e^(ct) can overflow long horizons; the
    comparison is arranged so an overflowing sample resolves to pass/fail
    by sign (a non-negative feedforward flux can never fail, a negative
    one at an overflowing time always does).
    """
    if horizon <= 0:
        raise ParameterError("pre-flight horizon must be > 0")
    if c <= 0:
        raise ParameterError("controller gain c must be > 0")
    phys = planner.phys
    t = np.linspace(0.0, horizon, samples)
    sig = planner.signals(t)
    d0 = E0 - float(sig.E_r[0])
    coef = phys.alpha / (phys.k * c)

    with np.errstate(over="ignore", invalid="ignore"):
        amp = np.exp(np.minimum(c * t, 709.0)) * np.where(c * t > 709.0, np.inf, 1.0)
        rhs = np.where(sig.q_ff == 0.0, 0.0, coef * sig.q_ff * amp)
    flux_margin = rhs - d0
    i = int(np.argmin(flux_margin))

    headroom = phys.latent_scale * planner.ref.s_bar - sig.E_r - d0 * np.exp(-c * t)
    j = int(np.argmin(headroom))

    return EnergyWindowReport(
        E0=E0,
        E_r0=float(sig.E_r[0]),
        flux_margin=float(flux_margin[i]),
        flux_margin_time=float(t[i]),
        flux_ok=bool(flux_margin[i] >= 0.0),
        headroom_margin=float(headroom[j]),
        headroom_margin_time=float(t[j]),
        headroom_ok=bool(headroom[j] > 0.0),
        horizon=horizon,
        samples=samples,
    )


@dataclass(frozen=True)
class SafetyFlags:
    """Per-step runtime safety conditions (monitoring, not enforcement)."""

    flux_nonneg: bool
    temp_valid: bool
    sdot_nonneg: bool
    interface_band: bool

    @property
    def all_ok(self) -> bool:
        return self.flux_nonneg and self.temp_valid and self.sdot_nonneg and self.interface_band


def safety_monitor(
    state: SimState,
    q_c: float,
    phys: PhysicalParams,
    ref: ReferenceTrajectory,
    s0: float,
) -> SafetyFlags:
    """Evaluate the runtime safety conditions for one state/flux pair."""
    return SafetyFlags(
        flux_nonneg=q_c >= -TOL_Q,
        temp_valid=float(np.min(state.temp)) >= phys.T_m - 10.0 * TOL_T,
        sdot_nonneg=state.sdot >= -1e-12,
        interface_band=(s0 - TOL_S < state.s <= ref.s_bar + TOL_S) and state.s < phys.L,
    )


class TrackingFlux:
    """Closed-loop flux law over precomputed per-step plan samples.

    ``q_ff[k]`` is the feedforward for step k (the runner samples it at
    the step midpoint, the second-order-consistent time level for the
    applied flux); ``e_r[k]`` is the reference energy at the step-start
    time, matching the state energy entering the feedback term.  Lookup
    rounds t/dt, exact on the uniform step grid.
    """

    def __init__(self, q_ff: np.ndarray, e_r: np.ndarray, dt: float, c: float, phys: PhysicalParams):
        self.q_ff = np.asarray(q_ff, dtype=float)
        self.e_r = np.asarray(e_r, dtype=float)
        self.dt = dt
        self.c = ControllerConfig(c).c
        self.phys = phys

    def _index(self, t: float) -> int:
        idx = int(round(t / self.dt))
        if not 0 <= idx < self.q_ff.size:
            raise ParameterError(f"flux requested outside the planned horizon: t = {t}")
        return idx

    def __call__(self, t: float, state: SimState) -> float:
        idx = self._index(t)
        e = energy(state, self.phys)
        return control_flux(t, e, float(self.e_r[idx]), float(self.q_ff[idx]), self.c, self.phys)


class FeedforwardFlux:
    """Open-loop flux law: the planned feedforward only."""

    def __init__(self, q_ff: np.ndarray, dt: float):
        self.q_ff = np.asarray(q_ff, dtype=float)
        self.dt = dt

    def __call__(self, t: float, state: SimState) -> float:
        idx = int(round(t / self.dt))
        if not 0 <= idx < self.q_ff.size:
            raise ParameterError(f"flux requested outside the planned horizon: t = {t}")
        return float(self.q_ff[idx])
