"""Trajectory records, tracking diagnostics, and CSV serialization.

The tracking functional aggregates the squared temperature error against
the interface-aligned reference profile with the interface position and
velocity gaps:

    Phi(t) = int_0^s (T(x) - T_ref(x - (s - s_r)))^2 dx
             + (s - s_r)^2 + (s' - s_r')^2.

Aligning the profiles means the reference series is evaluated at
arguments shifted by the interface gap, including slightly negative ones
when the simulated interface runs ahead of the reference; that is plain
analytic continuation and stays inside the certified disk as long as the
interface stays below R/F.
"""

from __future__ import annotations

import math
import os
import tempfile
from dataclasses import dataclass, fields

import numpy as np

from .errors import SeriesDivergenceError
from .planner import PlanSignals, SeriesPlan, reference_temperature
from .solver import SimState

__all__ = [
    "TrajectoryRecord",
    "tracking_functional",
    "energy_decay_residual",
    "fit_decay_rate",
    "write_records",
    "parse_records",
    "write_plan",
    "parse_plan",
    "write_field",
]

CSV_COLUMNS = [
    "t_s",
    "s_m",
    "sdot_mps",
    "qc_Wpm2",
    "E",
    "E_r",
    "Phi",
    "T_min_C",
    "T_at0_C",
    "safe_flux",
    "safe_temp",
]

PLAN_COLUMNS = ["t_s", "s_r_m", "sdot_r_mps", "q_ff_Wpm2", "E_r"]

FIELD_COLUMNS = ["t_s", "x_m", "T_C", "T_ref_C"]


@dataclass(frozen=True)
class TrajectoryRecord:
    """One logged step of a simulation run.

    ``E_r`` and ``Phi`` are NaN when no plan is attached to the run (open
    loop) or when the diagnostic was unavailable at that step; NaN fields
    serialize as empty CSV cells.
    """

    t: float
    s: float
    sdot: float
    q_c: float
    E: float
    E_r: float
    Phi: float
    T_min: float
    T_at0: float
    safe_flux: bool
    safe_temp: bool

    def row(self) -> list:
        return [
            self.t, self.s, self.sdot, self.q_c, self.E, self.E_r, self.Phi,
            self.T_min, self.T_at0, int(self.safe_flux), int(self.safe_temp),
        ]


def tracking_functional(state: SimState, plan: SeriesPlan) -> float:
    """Phi for one state against the plan at the same time.

    Returns NaN when the shifted evaluation would leave the certified
    radius of convergence.
    """
    x = np.linspace(0.0, 1.0, state.temp.size) * state.s
    shift = state.s - plan.s_r
    try:
        t_ref = reference_temperature(plan, x - shift).value
    except SeriesDivergenceError:
        return float("nan")
    dx = state.s / (state.temp.size - 1)
    integral = float(np.trapezoid((state.temp - t_ref) ** 2, dx=dx))
    return integral + shift**2 + (state.sdot - plan.sdot_r) ** 2


def energy_decay_residual(records: list[TrajectoryRecord], c: float, floor: float = 1e-12) -> float:
    """Worst relative deviation from the exponential energy-error law."""
    if not records:
        raise ValueError("energy_decay_residual needs at least one record")
    t = np.array([r.t for r in records])
    err = np.array([r.E - r.E_r for r in records])
    if not np.all(np.isfinite(err)):
        raise ValueError("records carry non-finite energies; was the run planned?")
    predicted = err[0] * np.exp(-c * (t - t[0]))
    return float(np.max(np.abs(err - predicted)) / max(abs(err[0]), floor))


def fit_decay_rate(times, values) -> tuple[float, float]:
    """Least-squares exponential rate of positive samples.

    Returns ``(rate, r_squared)`` where the fitted model is
    ``values ~ exp(-rate * t)``.
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if t.size < 10:
        raise ValueError("decay fit needs at least 10 points")
    if np.any(v <= 0):
        raise ValueError("decay fit needs strictly positive values")
    logv = np.log(v)
    slope, intercept = np.polyfit(t, logv, 1)
    resid = logv - (slope * t + intercept)
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum((logv - logv.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return float(-slope), r2


def fit_energy_decay(records: list[TrajectoryRecord], c: float) -> dict:
    """Residual against the exponential law plus a rate fit.

    The rate is fitted over the first three time constants, where the
    error signal still dominates the discretization floor; the residual
    covers the whole record list.
    """
    residual = energy_decay_residual(records, c)
    t0 = records[0].t
    window_end = t0 + 3.0 / c
    t, v = [], []
    for r in records:
        err = abs(r.E - r.E_r)
        if r.t <= window_end and err > 0:
            t.append(r.t)
            v.append(err)
    rate, r2 = fit_decay_rate(t, v)
    return {
        "gain_c": c,
        "residual_max_rel": residual,
        "fitted_rate": rate,
        "r_squared": r2,
        "window_start_s": t0,
        "window_end_s": window_end,
    }


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    v = float(value)
    if math.isnan(v):
        return ""
    return f"{v:.9g}"


def _atomic_write(path: str, text: str):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_records(records: list[TrajectoryRecord], path: str, provenance: str | None = None):
    """Write the trajectory CSV (atomic: temp file then rename)."""
    lines = []
    if provenance:
        lines.append(f"# {provenance}")
    lines.append(",".join(CSV_COLUMNS))
    for r in records:
        lines.append(",".join(_fmt(v) for v in r.row()))
    _atomic_write(path, "\n".join(lines) + "\n")


def _parse_float(cell: str) -> float:
    return float("nan") if cell == "" else float(cell)


def parse_records(path: str) -> list[TrajectoryRecord]:
    """Read a trajectory CSV back into records."""
    with open(path) as fh:
        rows = [line.rstrip("\n") for line in fh if not line.startswith("#")]
    if not rows or rows[0].split(",") != CSV_COLUMNS:
        raise ValueError(f"{path}: missing or wrong trajectory header")
    out = []
    for row in rows[1:]:
        cells = row.split(",")
        vals = [_parse_float(c) for c in cells[:9]]
        out.append(
            TrajectoryRecord(
                t=vals[0], s=vals[1], sdot=vals[2], q_c=vals[3], E=vals[4],
                E_r=vals[5], Phi=vals[6], T_min=vals[7], T_at0=vals[8],
                safe_flux=bool(int(cells[9])), safe_temp=bool(int(cells[10])),
            )
        )
    return out


def write_plan(signals: PlanSignals, path: str, provenance: str | None = None):
    """Write the planner CSV: one row per sample time."""
    lines = []
    if provenance:
        lines.append(f"# {provenance}")
    lines.append(",".join(PLAN_COLUMNS))
    for i in range(signals.t.size):
        lines.append(
            ",".join(
                _fmt(v)
                for v in (
                    signals.t[i], signals.s_r[i], signals.sdot_r[i],
                    signals.q_ff[i], signals.E_r[i],
                )
            )
        )
    _atomic_write(path, "\n".join(lines) + "\n")


def parse_plan(path: str) -> dict[str, np.ndarray]:
    with open(path) as fh:
        rows = [line.rstrip("\n") for line in fh if not line.startswith("#")]
    if not rows or rows[0].split(",") != PLAN_COLUMNS:
        raise ValueError(f"{path}: missing or wrong plan header")
    data = np.array([[_parse_float(c) for c in row.split(",")] for row in rows[1:]])
    if data.size == 0:
        data = data.reshape(0, len(PLAN_COLUMNS))
    return {name: data[:, i] for i, name in enumerate(PLAN_COLUMNS)}


def write_field(rows: list[tuple], path: str, provenance: str | None = None):
    """Write the dense temperature-field dump: (t, x, T, T_ref) rows."""
    lines = []
    if provenance:
        lines.append(f"# {provenance}")
    lines.append(",".join(FIELD_COLUMNS))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    _atomic_write(path, "\n".join(lines) + "\n")
