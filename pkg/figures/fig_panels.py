#!/usr/bin/env python3
"""Four-panel report figures from the tracking toolkit's CSV outputs.

Reads the trajectory CSV, the planner CSV, and the dense temperature
field CSV produced by `stefan-track simulate-closedloop --dump-field`
plus `stefan-track plan`, and renders:

    interface.png          (a) interface position: response vs reference
    heat_flux.png          (b) boundary heat flux: response vs reference
    temperature_field.png  (c) spatiotemporal temperature surfaces
    snapshots.png          (d) temperature profiles at chosen minutes

Responses are drawn as solid blue lines, references as dashed red, as in
the usual two-line comparison layout.

Usage:
    python fig_panels.py --trajectory t.csv --plan p.csv --field f.csv \
        --out DIR [--snapshots 0.05,1,10,99]
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

RESPONSE_STYLE = dict(color="tab:blue", linestyle="-", linewidth=1.5)
REFERENCE_STYLE = dict(color="tab:red", linestyle="--", linewidth=1.5)

TRAJECTORY_COLUMNS = ["t_s", "s_m", "sdot_mps", "qc_Wpm2", "E", "E_r", "Phi",
                      "T_min_C", "T_at0_C", "safe_flux", "safe_temp"]
PLAN_COLUMNS = ["t_s", "s_r_m", "sdot_r_mps", "q_ff_Wpm2", "E_r"]
FIELD_COLUMNS = ["t_s", "x_m", "T_C", "T_ref_C"]


class SchemaError(ValueError):
    pass


def read_csv(path: str, required: list[str]) -> dict[str, np.ndarray]:
    """Read a comment-prefixed CSV into column arrays, checking the schema."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(line for line in fh if not line.startswith("#"))]
    if not rows:
        raise SchemaError(f"{path}: no header row")
    header = rows[0]
    for col in required:
        if col not in header:
            raise SchemaError(f"{path}: missing column {col!r}")
    data = rows[1:]
    if not data:
        raise SchemaError(f"{path}: no data rows")
    out = {}
    for col in required:
        i = header.index(col)
        out[col] = np.array([float(r[i]) if r[i] != "" else np.nan for r in data])
    return out


@dataclass
class FigureSpec:
    trajectory: str
    plan: str
    field: str
    out_dir: str
    snapshot_minutes: tuple[float, ...] = (0.05, 1.0, 10.0, 99.0)
    figures: dict = field(default_factory=dict)


def field_slices(data: dict[str, np.ndarray]):
    """Group the flat (t, x, T, T_ref) rows into per-time slices."""
    t = data["t_s"]
    slices = []
    for value in np.unique(t):
        m = t == value
        order = np.argsort(data["x_m"][m])
        slices.append(
            (value, data["x_m"][m][order], data["T_C"][m][order], data["T_ref_C"][m][order])
        )
    return slices


def panel_interface(traj, plan):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(traj["t_s"] / 60.0, traj["s_m"], label="tracking", **RESPONSE_STYLE)
    ax.plot(plan["t_s"] / 60.0, plan["s_r_m"], label="reference", **REFERENCE_STYLE)
    ax.set_xlabel("time [min]")
    ax.set_ylabel("interface position [m]")
    ax.legend()
    fig.tight_layout()
    return fig


def panel_heat_flux(traj, plan):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(traj["t_s"] / 60.0, traj["qc_Wpm2"], label="tracking", **RESPONSE_STYLE)
    ax.plot(plan["t_s"] / 60.0, plan["q_ff_Wpm2"], label="reference", **REFERENCE_STYLE)
    ax.axhline(0.0, color="0.6", linewidth=0.8)
    ax.set_xlabel("time [min]")
    ax.set_ylabel("boundary heat flux [W/m$^2$]")
    ax.legend()
    fig.tight_layout()
    return fig


def panel_field(slices):
    fig = plt.figure(figsize=(9, 3.8))
    for i, (key, title) in enumerate(((2, "tracking"), (3, "reference"))):
        ax = fig.add_subplot(1, 2, i + 1, projection="3d")
        tm = np.array([[s[0] / 60.0] * len(s[1]) for s in slices])
        xm = np.array([s[1] for s in slices])
        zm = np.array([s[key] for s in slices])
        ax.plot_surface(tm, xm, np.nan_to_num(zm), cmap="viridis",
                        rstride=2, cstride=2, linewidth=0)
        ax.set_xlabel("time [min]")
        ax.set_ylabel("x [m]")
        ax.set_zlabel("T [$^\\circ$C]")
        ax.set_title(title)
    fig.tight_layout()
    return fig


def panel_snapshots(slices, minutes, horizon_s):
    for m in minutes:
        if m * 60.0 > horizon_s + 1e-9:
            raise SchemaError(f"snapshot time {m} min lies beyond the simulated horizon")
    times = np.array([s[0] for s in slices])
    fig, axes = plt.subplots(1, len(minutes), figsize=(3.0 * len(minutes), 3.0), sharey=True)
    axes = np.atleast_1d(axes)
    for ax, m in zip(axes, minutes):
        i = int(np.argmin(np.abs(times - m * 60.0)))
        _, x, temp, temp_ref = slices[i]
        ax.plot(x, temp, label="tracking", **RESPONSE_STYLE)
        ax.plot(x, temp_ref, label="reference", **REFERENCE_STYLE)
        ax.set_title(f"t = {m:g} min")
        ax.set_xlabel("x [m]")
    axes[0].set_ylabel("T [$^\\circ$C]")
    axes[0].legend()
    fig.tight_layout()
    return fig


def render(spec: FigureSpec) -> dict[str, str]:
    """Render all four panels; returns {name: file path}."""
    traj = read_csv(spec.trajectory, TRAJECTORY_COLUMNS)
    plan = read_csv(spec.plan, PLAN_COLUMNS)
    fdata = read_csv(spec.field, FIELD_COLUMNS)
    slices = field_slices(fdata)
    horizon = float(np.max(traj["t_s"]))

    spec.figures = {
        "interface": panel_interface(traj, plan),
        "heat_flux": panel_heat_flux(traj, plan),
        "temperature_field": panel_field(slices),
        "snapshots": panel_snapshots(slices, spec.snapshot_minutes, horizon),
    }
    os.makedirs(spec.out_dir, exist_ok=True)
    paths = {}
    for name, fig in spec.figures.items():
        path = os.path.join(spec.out_dir, f"{name}.png")
        fig.savefig(path, dpi=150)
        paths[name] = path
    return paths


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trajectory", required=True)
    ap.add_argument("--plan", required=True)
    ap.add_argument("--field", required=True)
    ap.add_argument("--out", required=True)
    ap.add_argument("--snapshots", default="0.05,1,10,99",
                    help="comma-separated snapshot times in minutes")
    args = ap.parse_args(argv)
    try:
        minutes = tuple(float(v) for v in args.snapshots.split(","))
    except ValueError:
        print(f"bad --snapshots value: {args.snapshots!r}", file=sys.stderr)
        return 2
    spec = FigureSpec(
        trajectory=args.trajectory, plan=args.plan, field=args.field,
        out_dir=args.out, snapshot_minutes=minutes,
    )
    try:
        paths = render(spec)
    except (SchemaError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    for name, path in paths.items():
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
