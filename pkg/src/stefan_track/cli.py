"""Command-line front end.

    stefan-track <mode> [--config FILE] [--set section.key=value]... [--out DIR]

Modes: ``plan`` (planner CSV), ``simulate-closedloop`` and
``simulate-feedforward`` (trajectory CSV, safety report, decay-fit
summary), ``check-safety`` (pre-flight reports only), ``verify``
(numerical property suite).

Exit codes: 0 success, 1 usage or configuration error, 2 pre-flight
safety check failed, 3 runtime safety violation, 4 numerical
divergence or verification failure.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import __version__
from .config import ScenarioConfig, config_hash, parse_config
from .diagnostics import (
    fit_energy_decay,
    write_field,
    write_plan,
    write_records,
)
from .errors import ParameterError, SeriesDivergenceError
from .jets import Jet, jet_add, jet_derivative, jet_mul, jet_truncate
from .planner import (
    check_coefficient_bounds,
    feedforward_flux,
    reference_energy,
    reference_gradient,
    reference_temperature,
)
from .reference import amplitude
from .runner import PreflightReport, preflight, simulate
from .solver import energy, initialize, run

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_PREFLIGHT = 2
EXIT_RUNTIME_SAFETY = 3
EXIT_NUMERIC = 4

MODES = ("plan", "simulate-closedloop", "simulate-feedforward", "check-safety", "verify")


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _build_parser() -> _Parser:
    parser = _Parser(prog="stefan-track", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="mode", required=True)
    for mode in MODES:
        p = sub.add_parser(mode)
        p.add_argument("--config", default=None, help="scenario TOML (omit for defaults)")
        p.add_argument(
            "--set", dest="overrides", action="append", default=[],
            metavar="KEY=VALUE", help="override a config key (section.key=value)",
        )
        p.add_argument("--out", default="out", help="output directory")
        if mode.startswith("simulate"):
            p.add_argument(
                "--dump-field", action="store_true",
                help="also write the dense (t, x, T, T_ref) field CSV",
            )
    return parser


def _provenance(cfg: ScenarioConfig) -> str:
    return f"config-hash={config_hash(cfg.raw)} version={__version__}"


def _echo(cfg: ScenarioConfig, planner) -> None:
    a = amplitude(cfg.ref_params)
    print(f"scenario hash {config_hash(cfg.raw)}")
    print(f"  amplitude_A       = {a:.6g} m/s")
    print(f"  diffusivity_alpha = {cfg.phys.alpha:.6g} m^2/s")
    print(f"  stefan_coeff_beta = {cfg.phys.beta:.6g} m^2/(s K)")
    print(f"  gevrey (M, R, d)  = ({planner.cert.M:.6g}, {planner.cert.R:.6g}, {planner.cert.d:g})")
    print(f"  series F          = {planner.F:.6g}, ratio F*s_bar/R = {planner.ratio:.6g}")


def _pf(ok: bool) -> str:
    return "pass" if ok else "FAIL"


def _report_lines(cfg: ScenarioConfig, planner, report: PreflightReport) -> list[str]:
    adm, conv, tv, ew = (
        report.admissibility, report.convergence, report.temp_validity, report.energy_window,
    )
    return [
        f"scenario.hash: {config_hash(cfg.raw)}",
        f"reference.amplitude_A_mps: {amplitude(cfg.ref_params):.9g}",
        f"reference.starts_positive: {_pf(adm.starts_positive)}",
        f"reference.velocity_nonnegative: {_pf(adm.velocity_nonnegative)}",
        f"reference.limit_inside_domain: {_pf(adm.limit_inside_domain)}",
        f"reference.min_velocity_mps: {adm.min_velocity:.9g}",
        f"gevrey.M_mps: {planner.cert.M:.9g}",
        f"gevrey.R_s: {planner.cert.R:.9g}",
        f"gevrey.d: {planner.cert.d:g}",
        f"gevrey.degenerate: {int(planner.cert.degenerate)}",
        f"convergence.F: {conv.F:.9g}",
        f"convergence.ratio: {conv.ratio:.9g}",
        f"convergence.radius_pass: {_pf(conv.converges)}",
        f"convergence.envelope_pass: {_pf(conv.envelope_ok)}",
        f"series_temperature.min_C: {tv.min_value:.9g}",
        f"series_temperature.pass: {_pf(tv.ok)}",
        f"energy_window.E0: {ew.E0:.9g}",
        f"energy_window.E_r0: {ew.E_r0:.9g}",
        f"energy_window.flux_margin: {ew.flux_margin:.9g}",
        f"energy_window.flux_pass: {_pf(ew.flux_ok)}",
        f"energy_window.headroom_margin: {ew.headroom_margin:.9g}",
        f"energy_window.headroom_pass: {_pf(ew.headroom_ok)}",
        f"preflight.overall: {_pf(report.all_ok)}",
    ]


def _write_text(path: str, lines: list[str]) -> None:
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _log_times(cfg: ScenarioConfig) -> np.ndarray:
    n_steps = int(round(cfg.horizon / cfg.solver.dt))
    steps = sorted(set(range(0, n_steps + 1, cfg.log_every)) | {n_steps})
    return np.asarray(steps) * cfg.solver.dt


def _mode_plan(cfg: ScenarioConfig, outdir: str) -> int:
    planner = cfg.planner()
    _echo(cfg, planner)
    signals = planner.signals(_log_times(cfg))
    write_plan(signals, os.path.join(outdir, "plan.csv"), _provenance(cfg))
    print(f"wrote {outdir}/plan.csv ({signals.t.size} rows)")
    return EXIT_OK


def _mode_check_safety(cfg: ScenarioConfig, outdir: str) -> int:
    planner = cfg.planner()
    _echo(cfg, planner)
    report = preflight(cfg, planner)
    lines = _report_lines(cfg, planner, report)
    _write_text(os.path.join(outdir, "safety_report.txt"), lines)
    print("\n".join(lines))
    return EXIT_OK if report.all_ok else EXIT_PREFLIGHT


def _mode_simulate(cfg: ScenarioConfig, outdir: str, closed_loop: bool, dump_field: bool) -> int:
    planner = cfg.planner()
    _echo(cfg, planner)
    pre = preflight(cfg, planner)
    outcome = simulate(cfg, closed_loop=closed_loop, dump_field=dump_field)

    prov = _provenance(cfg)
    write_records(outcome.records, os.path.join(outdir, "trajectory.csv"), prov)
    write_plan(planner.signals(_log_times(cfg)), os.path.join(outdir, "plan.csv"), prov)
    if dump_field:
        write_field(outcome.field_rows, os.path.join(outdir, "field.csv"), prov)

    summary = _report_lines(cfg, planner, pre) + [
        f"runtime.mode: {'closedloop' if closed_loop else 'feedforward'}",
        f"runtime.status: {outcome.status}",
        f"runtime.records: {outcome.safety.n_records}",
        f"runtime.flux_violations: {outcome.safety.flux_violations}",
        f"runtime.temp_violations: {outcome.safety.temp_violations}",
        f"runtime.sdot_violations: {outcome.safety.sdot_violations}",
        f"runtime.band_violations: {outcome.safety.band_violations}",
    ]
    _write_text(os.path.join(outdir, "safety_report.txt"), summary)

    fit_lines = [f"decay_fit.gain_c: {cfg.control.c:.9g}"]
    try:
        fit = fit_energy_decay(outcome.records, cfg.control.c)
        fit_lines += [
            f"decay_fit.residual_max_rel: {fit['residual_max_rel']:.9g}",
            f"decay_fit.fitted_rate: {fit['fitted_rate']:.9g}",
            f"decay_fit.r_squared: {fit['r_squared']:.9g}",
            f"decay_fit.window_start_s: {fit['window_start_s']:.9g}",
            f"decay_fit.window_end_s: {fit['window_end_s']:.9g}",
        ]
    except ValueError as err:
        fit_lines.append(f"decay_fit.note: not available ({err})")
    _write_text(os.path.join(outdir, "decay_fit.txt"), fit_lines)

    print(f"status: {outcome.status}; records: {len(outcome.records)}")
    print(
        "violations (flux/temp/sdot/band): "
        f"{outcome.safety.flux_violations}/{outcome.safety.temp_violations}/"
        f"{outcome.safety.sdot_violations}/{outcome.safety.band_violations}"
    )
    if not outcome.completed:
        return EXIT_NUMERIC
    if closed_loop and not outcome.safety.clean:
        return EXIT_RUNTIME_SAFETY
    return EXIT_OK


def _verify_checks(cfg: ScenarioConfig):
    """Numerical property suite; yields (name, ok, detail)."""
    planner = cfg.planner()
    phys = cfg.phys
    rng = np.random.default_rng(20260811)

    # Jet algebra: Cauchy product against exact polynomial products and the
    # Leibniz rule on random polynomial jets.
    ok, worst = True, 0.0
    for _ in range(20):
        a = Jet(rng.uniform(-2, 2, size=7))
        b = Jet(rng.uniform(-2, 2, size=7))
        exact = np.convolve(a.coeffs, b.coeffs)[:7]
        err = float(np.max(np.abs(jet_mul(a, b).coeffs - exact)))
        lhs = jet_derivative(jet_mul(a, b))
        rhs = jet_add(
            jet_mul(jet_derivative(a), jet_truncate(b, b.order - 1)),
            jet_mul(jet_truncate(a, a.order - 1), jet_derivative(b)),
        )
        err = max(err, float(np.max(np.abs(lhs.coeffs - rhs.coeffs))))
        worst = max(worst, err)
        ok &= err < 1e-12 * max(1.0, float(np.max(np.abs(exact))))
    yield "jet-algebra identities", ok, f"worst abs error {worst:.3g}"

    # Coefficient recursion: alpha*a_n = a_{n-2}' - s_r'*a_{n-1} read back
    # from the stored jets.
    worst = 0.0
    for t in np.linspace(0.0, cfg.horizon, 7):
        plan = planner.plan_at(float(t))
        sdot = plan.sdot_r
        for n in range(2, plan.N + 1):
            da = plan.a[n - 2].derivative_value(1)
            lhs = phys.alpha * plan.a[n].value
            rhs = da - sdot * plan.a[n - 1].value
            scale = max(abs(lhs), abs(rhs), 1e-300)
            worst = max(worst, abs(lhs - rhs) / scale)
    yield "coefficient recursion", worst < 1e-10, f"worst rel residual {worst:.3g}"

    # Interface conditions of the expansion.
    plan = planner.plan_at(0.0)
    resid = abs(
        phys.beta * plan.a[1].value
        + phys.epsilon * planner.ref.derivative(0.0, 2)
        + planner.ref.velocity(0.0)
    )
    t_at_interface = reference_temperature(plan, plan.s_r).value
    q1 = feedforward_flux(plan)
    q2 = -phys.k * reference_gradient(plan, 0.0).value
    ok = (
        resid < 1e-10 * max(1.0, abs(phys.beta * plan.a[1].value))
        and t_at_interface == phys.T_m
        and abs(q1 - q2) <= 1e-10 * max(1.0, abs(q1))
    )
    yield "interface conditions", ok, f"a1 residual {resid:.3g}, q_ff delta {abs(q1 - q2):.3g}"

    # Certified coefficient bound and convergence ratio.
    bounds = check_coefficient_bounds(planner, np.linspace(0.0, cfg.horizon, 50))
    yield (
        "coefficient bound",
        bounds.ok,
        f"{len(bounds.violations)} violations, worst log-margin {bounds.worst_log_margin:.3g}",
    )
    yield "convergence ratio", planner.ratio < 1.0, f"F*s_bar/R = {planner.ratio:.6g}"

    # Closed-form reference energy against quadrature.
    plan = planner.plan_at(1800.0)
    x = np.linspace(0.0, plan.s_r, 10_001)
    quad = float(np.trapezoid(reference_temperature(plan, x).value - phys.T_m, x))
    quad += phys.latent_scale * (phys.epsilon * plan.sdot_r + plan.s_r)
    closed = reference_energy(plan)
    rel = abs(closed - quad) / abs(closed)
    yield "reference energy quadrature", rel < 1e-6, f"rel diff {rel:.3g}"

    # Energy conservation of the simulator under constant heating.
    state = initialize(phys, cfg.solver, cfg.s0, cfg.v0, cfg.initial_profile())
    e_start = energy(state, phys)
    q_const = 3000.0
    res = run(phys, cfg.solver, state, lambda t, st: q_const, 600.0, log_every=10**9)
    e_end = energy(res.state, phys)
    expected = phys.alpha / phys.k * q_const * 600.0
    rel = abs(e_end - e_start - expected) / abs(e_end - e_start)
    yield "energy conservation", rel < 5e-3, f"rel defect {rel:.3g}"


def _mode_verify(cfg: ScenarioConfig, outdir: str) -> int:
    all_ok = True
    for name, ok, detail in _verify_checks(cfg):
        all_ok &= ok
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    return EXIT_OK if all_ok else EXIT_NUMERIC


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config, args.overrides)
    except (ParameterError, OSError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    os.makedirs(args.out, exist_ok=True)
    try:
        if args.mode == "plan":
            return _mode_plan(cfg, args.out)
        if args.mode == "check-safety":
            return _mode_check_safety(cfg, args.out)
        if args.mode == "simulate-closedloop":
            return _mode_simulate(cfg, args.out, True, args.dump_field)
        if args.mode == "simulate-feedforward":
            return _mode_simulate(cfg, args.out, False, args.dump_field)
        if args.mode == "verify":
            return _mode_verify(cfg, args.out)
    except SeriesDivergenceError as err:
        print(f"numerical divergence: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    raise AssertionError(f"unhandled mode {args.mode}")  # pragma: no cover


if __name__ == "__main__":
    sys.exit(main())
