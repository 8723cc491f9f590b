"""Series-expansion motion planner for the melting front.

Given a reference interface trajectory, the reference temperature field
is expanded about the interface,

    T_ref(x, t) = T_m + sum_n  a_n(t)/n! * (x - s_r(t))^n,

with a_0 = 0, a_1 = -(eps * s_r'' + s_r') / beta from the interface
conditions, and the higher coefficients from pushing the expansion
through the heat equation:

    a_n = (a_{n-2}' - s_r' * a_{n-1}) / alpha      (n >= 2).

Coefficients and the time derivatives the recursion consumes are carried
as jets; the recursion drops one derivative order per two index steps,
so jet orders descend along n.

The derivative-growth certificate of the reference bounds the
coefficients by ``M F^(n-1) G H_{n,m}`` and gives the series a radius of
convergence ``R / F``; the planner records both and refuses evaluation
outside the certified disk.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import ParameterError, SeriesDivergenceError
from .jets import Jet, diff_coeffs, mul_coeffs
from .reference import GevreyCertificate, ReferenceTrajectory, estimate_gevrey

__all__ = [
    "PhysicalParams",
    "SeriesPlan",
    "SeriesPlanner",
    "SeriesValue",
    "PlanSignals",
    "series_F",
    "reference_temperature",
    "reference_gradient",
    "feedforward_flux",
    "reference_energy",
]

#: Relative size allowed for the last retained series term.
TAIL_RTOL = 1e-9

#: Slack below the melting temperature tolerated in validity checks, kelvin.
TOL_T = 1e-9


@dataclass(frozen=True)
class PhysicalParams:
    """Material and model constants of the melting problem."""

    alpha: float            # thermal diffusivity, m^2/s
    k: float                # thermal conductivity, W/(m K)
    beta: float             # interface response coefficient, m^2/(s K)
    epsilon: float          # interface relaxation time, s
    T_m: float = 0.0        # melting temperature, deg C
    L: float = 0.2          # domain length, m

    def __post_init__(self):
        for name in ("alpha", "k", "beta", "epsilon", "L"):
            if getattr(self, name) <= 0:
                raise ParameterError(f"physical parameter {name} must be > 0")

    @classmethod
    def from_material(
        cls,
        k: float = 116.0,
        rho: float = 6570.0,
        c_p: float = 389.57,
        latent_heat: float = 111_961.0,
        epsilon: float = 10.0,
        T_m: float = 0.0,
        L: float = 0.2,
        alpha: float | None = None,
        beta: float | None = None,
    ) -> "PhysicalParams":
        """Constants from bulk material data (defaults: zinc).

        ``alpha`` and ``beta`` are derived as k/(rho c_p) and
        k/(rho latent_heat) unless overridden explicitly.
        """
        if alpha is None:
            alpha = k / (rho * c_p)
        if beta is None:
            beta = k / (rho * latent_heat)
        return cls(alpha=alpha, k=k, beta=beta, epsilon=epsilon, T_m=T_m, L=L)

    @property
    def latent_scale(self) -> float:
        """alpha/beta, the energy weight of the interface terms (K)."""
        return self.alpha / self.beta


def series_F(M: float, R: float, alpha: float) -> float:
    """Growth base of the coefficient bound.

    The positive root of ``4 alpha F^2 = R M F + 4 R``, which makes the
    inductive bound on the coefficients close.
    """
    if M < 0 or R <= 0 or alpha <= 0:
        raise ParameterError("series_F requires M >= 0, R > 0, alpha > 0")
    return (R * M + math.sqrt(R * R * M * M + 16.0 * alpha * R)) / (4.0 * alpha)


def _jet_orders(N: int) -> list[int]:
    # One derivative order is consumed per two index steps; +1 slack keeps
    # first-derivative reads valid at every stored index.
    return [(N - n) // 2 + 1 for n in range(N + 1)]


def _coefficient_tables(
    phys: PhysicalParams,
    ref: ReferenceTrajectory,
    times: np.ndarray,
    N: int,
    values_only: bool = False,
):
    """Run the coefficient recursion over a batch of times.

    Returns ``(tables, values)`` where ``values[n, i] = a_n(times[i])``
    and ``tables[n]`` is the full normalized-coefficient array of shape
    ``(order_n + 1, len(times))`` (``None`` entries when ``values_only``).
    """
    t = np.atleast_1d(np.asarray(times, dtype=float))
    orders = _jet_orders(N)
    sdot = ref.velocity_coeffs(t, orders[0])

    # a_1 row j: -(eps * s_r^(j+2) + s_r^(j+1)) / (beta * j!). The velocity
    # jet already holds s_r^(j+1)/j!, so its derivative rows give the rest.
    a1 = np.zeros((orders[1] + 1,) + t.shape)
    fact = 1.0
    for j in range(orders[1] + 1):
        if j > 0:
            fact *= j
        d1 = ref.derivative(t, j + 1)
        d2 = ref.derivative(t, j + 2)
        a1[j] = -(phys.epsilon * d2 + d1) / (phys.beta * fact)

    values = np.zeros((N + 1,) + t.shape)
    tables: list[np.ndarray | None] = [None] * (N + 1)

    prev2 = np.zeros((orders[0] + 1,) + t.shape)
    prev1 = a1
    tables[0], tables[1] = prev2, prev1
    values[1] = a1[0]
    for n in range(2, N + 1):
        rows = orders[n] + 1
        da = diff_coeffs(prev2)  # exactly `rows` rows by the sizing rule
        prod = mul_coeffs(sdot, prev1, out_len=rows)
        cur = (da[:rows] - prod) / phys.alpha
        values[n] = cur[0]
        if not values_only:
            tables[n] = cur
        prev2, prev1 = prev1, cur
    if values_only:
        tables = None
    return tables, values


class SeriesValue(NamedTuple):
    """A series evaluation together with its truncation-tail estimate."""

    value: float
    tail: float


@dataclass(frozen=True)
class SeriesPlan:
    """Truncated expansion of the reference temperature at one time."""

    N: int
    t: float
    a: list[Jet]
    s_r: float
    sdot_r: float
    phys: PhysicalParams
    F: float
    R: float
    ratio: float           # F * sup_t s_r / R; < 1 certifies convergence
    convergent: bool
    values: np.ndarray = field(repr=False)  # a_n(t), shape (N+1,)

    def radius(self) -> float:
        return self.R / self.F


class SeriesPlanner:
    """Plans reference temperature, feedforward flux, and reference energy.

    Construction estimates (or accepts) a derivative-growth certificate
    for the reference and derives the convergence record shared by every
    plan it produces.
    """

    def __init__(
        self,
        phys: PhysicalParams,
        ref: ReferenceTrajectory,
        N: int = 30,
        cert: GevreyCertificate | None = None,
        gevrey_d: float = 2.0,
        gevrey_m_max: int = 10,
    ):
        if N < 1:
            raise ParameterError("series truncation order N must be >= 1")
        self.phys = phys
        self.ref = ref
        self.N = N
        self.cert = cert if cert is not None else estimate_gevrey(ref, d=gevrey_d, m_max=gevrey_m_max)
        self.F = series_F(self.cert.M, self.cert.R, phys.alpha)
        self.ratio = self.F * ref.s_bar / self.cert.R
        self.convergent = self.ratio < 1.0

    def plan_at(self, t: float, N: int | None = None) -> SeriesPlan:
        """Full jet-carrying plan at a single time."""
        if t < 0:
            raise ParameterError("plan time must be >= 0")
        N = self.N if N is None else N
        tables, values = _coefficient_tables(self.phys, self.ref, np.array([t]), N)
        jets = [Jet(tab[:, 0]) for tab in tables]
        if jets[N].order < 0:  # pragma: no cover - sizing rule guarantees >= 1
            raise RuntimeError("internal jet sizing error: tail coefficient lost")
        return SeriesPlan(
            N=N,
            t=float(t),
            a=jets,
            s_r=float(self.ref.position(t)),
            sdot_r=float(self.ref.velocity(t)),
            phys=self.phys,
            F=self.F,
            R=self.cert.R,
            ratio=self.ratio,
            convergent=self.convergent,
            values=values[:, 0],
        )

    def signals(self, times) -> "PlanSignals":
        """Feedforward flux and reference energy over a time batch.

        Memory-lean: only coefficient values are retained, so the batch
        may be the full step grid of a simulation.
        """
        t = np.atleast_1d(np.asarray(times, dtype=float))
        _, values = _coefficient_tables(self.phys, self.ref, t, self.N, values_only=True)
        s_r = np.asarray(self.ref.position(t))
        sdot_r = np.asarray(self.ref.velocity(t))
        q_ff = _flux_from_values(values, s_r, self.phys, self.N)
        e_r = _energy_from_values(values, s_r, sdot_r, self.phys, self.N)
        return PlanSignals(t=t, s_r=s_r, sdot_r=sdot_r, q_ff=q_ff, E_r=e_r)

    def coefficient_values(self, times) -> np.ndarray:
        """a_n over a time batch, shape (N+1, len(times))."""
        t = np.atleast_1d(np.asarray(times, dtype=float))
        _, values = _coefficient_tables(self.phys, self.ref, t, self.N, values_only=True)
        return values


@dataclass(frozen=True)
class PlanSignals:
    """Sampled planner outputs used by the controller and the CSV export."""

    t: np.ndarray
    s_r: np.ndarray
    sdot_r: np.ndarray
    q_ff: np.ndarray
    E_r: np.ndarray


def _require_convergent(plan: SeriesPlan):
    if not plan.convergent:
        raise SeriesDivergenceError(
            f"series plan not certified convergent: F*sup(s_r)/R = {plan.ratio:.6g} >= 1"
        )


def _check_radius(plan: SeriesPlan, xi):
    worst = float(np.max(np.abs(xi)))
    if worst * plan.F / plan.R >= 1.0:
        raise SeriesDivergenceError(
            f"evaluation outside radius of convergence: |x - s_r| = {worst:.6g} "
            f">= R/F = {plan.radius():.6g}"
        )


def _check_tail(tail, scale):
    bad = tail > TAIL_RTOL * np.maximum(scale, 1e-300)
    if np.any(bad):
        raise SeriesDivergenceError(
            "truncation tail exceeds tolerance; increase the series order"
        )


def reference_temperature(plan: SeriesPlan, x) -> SeriesValue:
    """Reference temperature at position ``x`` (series evaluation).

    Returns the value together with the magnitude of the last retained
    term as a truncation-tail estimate.
    """
    _require_convergent(plan)
    xi = np.asarray(x, dtype=float) - plan.s_r
    _check_radius(plan, xi)
    total = np.zeros_like(xi)
    scale = np.zeros_like(xi)
    power = np.ones_like(xi)
    fact = 1.0
    for n in range(1, plan.N + 1):
        power = power * xi
        fact *= n
        term = plan.values[n] / fact * power
        total += term
        scale += np.abs(term)
    tail = np.abs(plan.values[plan.N] / fact * power)
    _check_tail(tail, scale)
    if np.ndim(x) == 0:
        return SeriesValue(float(plan.phys.T_m + total), float(tail))
    return SeriesValue(plan.phys.T_m + total, tail)


def reference_gradient(plan: SeriesPlan, x) -> SeriesValue:
    """Spatial gradient of the reference temperature at ``x``."""
    _require_convergent(plan)
    xi = np.asarray(x, dtype=float) - plan.s_r
    _check_radius(plan, xi)
    total = np.zeros_like(xi)
    scale = np.zeros_like(xi)
    power = np.ones_like(xi)
    fact = 1.0
    for n in range(1, plan.N + 1):
        if n > 1:
            power = power * xi
            fact *= n - 1
        term = plan.values[n] / fact * power
        total += term
        scale += np.abs(term)
    tail = np.abs(plan.values[plan.N] / fact * power)
    _check_tail(tail, scale)
    if np.ndim(x) == 0:
        return SeriesValue(float(total), float(tail))
    return SeriesValue(total, tail)


def _flux_from_values(values: np.ndarray, s_r, phys: PhysicalParams, N: int):
    total = np.zeros_like(np.asarray(s_r, dtype=float))
    power = np.ones_like(total)
    fact = 1.0
    for n in range(N):
        if n > 0:
            power = power * (-s_r)
            fact *= n
        total += values[n + 1] / fact * power
    return -phys.k * total


def feedforward_flux(plan: SeriesPlan) -> float:
    """Boundary heat flux that makes the reference an exact solution."""
    _require_convergent(plan)
    _check_radius(plan, -plan.s_r)
    return float(
        _flux_from_values(plan.values[:, None], np.array([plan.s_r]), plan.phys, plan.N)[0]
    )


def _energy_from_values(values: np.ndarray, s_r, sdot_r, phys: PhysicalParams, N: int):
    # Closed-form integral: int_0^s (x - s)^n dx = (-1)^n s^(n+1) / (n+1).
    total = np.zeros_like(np.asarray(s_r, dtype=float))
    power = np.asarray(s_r, dtype=float) ** 2  # s^(n+1) at n = 1
    fact = 2.0  # (n+1)! at n = 1
    sign = -1.0
    for n in range(1, N + 1):
        if n > 1:
            power = power * s_r
            fact *= n + 1
            sign = -sign
        total += values[n] * sign * power / fact
    return total + phys.latent_scale * (phys.epsilon * np.asarray(sdot_r) + s_r)


def reference_energy(plan: SeriesPlan) -> float:
    """Reference energy: integrated superheat plus the interface terms.

    The interface part carries the weight alpha/beta, which is what makes
    the energy balance close exactly: dE_r/dt = (alpha/k) * q_ff.
    """
    _require_convergent(plan)
    return float(
        _energy_from_values(
            plan.values[:, None], np.array([plan.s_r]), np.array([plan.sdot_r]), plan.phys, plan.N
        )[0]
    )


@dataclass(frozen=True)
class BoundViolation:
    n: int
    m: int
    t: float
    magnitude: float
    bound: float


@dataclass(frozen=True)
class CoefficientBoundReport:
    """Certificate check ``|a_n^(m)(t)| <= M F^(n-1) G H_{n,m}``."""

    n_max: int
    m_max: int
    n_times: int
    violations: list[BoundViolation]
    worst_log_margin: float  # max over grid of log|a| - log(bound); <= 0 when ok

    @property
    def ok(self) -> bool:
        return not self.violations


def check_coefficient_bounds(
    planner: SeriesPlanner,
    times,
    n_max: int = 10,
    m_max: int = 4,
    rtol: float = 1e-9,
) -> CoefficientBoundReport:
    """Verify the inductive coefficient bound on a sampled grid.

    Comparison runs in log space: the bound mixes factorial growth with
    geometric decay and overflows doubles well inside the checked range.
    """
    cert = planner.cert
    phys = planner.phys
    if n_max > planner.N:
        raise ParameterError("n_max exceeds the planner truncation order")
    orders = _jet_orders(planner.N)
    if orders[n_max] < m_max:
        raise ParameterError(
            f"jets at n = {n_max} carry order {orders[n_max]} < m_max = {m_max}; "
            "increase the truncation order"
        )
    t = np.atleast_1d(np.asarray(times, dtype=float))
    tables, _ = _coefficient_tables(phys, planner.ref, t, planner.N)

    log_m = math.log(cert.M)
    log_f = math.log(planner.F)
    log_g = math.log((phys.epsilon + cert.R) / phys.beta)
    log_r = math.log(cert.R)
    d = cert.d

    violations: list[BoundViolation] = []
    worst = -math.inf
    for n in range(n_max + 1):
        for m in range(m_max + 1):
            log_bound = (
                log_m
                + (n - 1) * log_f
                + log_g
                + d * math.lgamma(n + m + 1)
                - (n + m) * log_r
                - (d - 1) * math.lgamma(n + 1)
            )
            deriv = np.abs(tables[n][m]) * math.factorial(m)
            with np.errstate(divide="ignore"):
                log_mag = np.log(deriv)
            margin = log_mag - log_bound
            i = int(np.argmax(margin))
            worst = max(worst, float(margin[i]))
            if margin[i] > math.log1p(rtol):
                violations.append(
                    BoundViolation(
                        n=n, m=m, t=float(t[i]),
                        magnitude=float(deriv[i]), bound=math.exp(log_bound),
                    )
                )
    return CoefficientBoundReport(
        n_max=n_max, m_max=m_max, n_times=t.size,
        violations=violations, worst_log_margin=worst,
    )


@dataclass(frozen=True)
class ConvergenceReport:
    """Radius-of-convergence certificate and envelope spot checks."""

    F: float
    R: float
    ratio: float             # F * sup_t s_r / R
    converges: bool
    envelope_ok: bool        # sampled |T_ref - T_m| and |grad| within envelopes
    worst_temp_margin: float  # max |T_ref - T_m| / envelope over samples
    worst_grad_margin: float


def check_convergence(planner: SeriesPlanner, t_samples: int = 20, horizon: float | None = None) -> ConvergenceReport:
    cert = planner.cert
    phys = planner.phys
    F, R = planner.F, cert.R
    ratio = planner.ratio
    if not ratio < 1.0:
        return ConvergenceReport(
            F=F, R=R, ratio=ratio, converges=False,
            envelope_ok=False, worst_temp_margin=math.inf, worst_grad_margin=math.inf,
        )
    if horizon is None:
        horizon = 5.0 * planner.ref.decay_scale()
    g = cert.M * (phys.epsilon + R) / phys.beta * R
    worst_t, worst_g = 0.0, 0.0
    for t in np.linspace(0.0, horizon, t_samples):
        plan = planner.plan_at(float(t))
        den = R - F * plan.s_r
        temp_env = g / (F * den)
        grad_env = g / den**2
        tv = abs(reference_temperature(plan, 0.0).value - phys.T_m)
        gv = abs(reference_gradient(plan, 0.0).value)
        worst_t = max(worst_t, tv / temp_env)
        worst_g = max(worst_g, gv / grad_env)
    return ConvergenceReport(
        F=F, R=R, ratio=ratio, converges=True,
        envelope_ok=worst_t <= 1.0 and worst_g <= 1.0,
        worst_temp_margin=worst_t, worst_grad_margin=worst_g,
    )


@dataclass(frozen=True)
class TemperatureValidityReport:
    """Minimum of the reference temperature over a space-time grid."""

    min_value: float
    at_t: float
    at_x: float
    ok: bool


def check_reference_temperature(
    planner: SeriesPlanner,
    horizon: float,
    nt: int = 200,
    nx: int = 200,
) -> TemperatureValidityReport:
    """Check T_ref >= T_m - tol on [0, s_r(t)] x [0, horizon]."""
    phys = planner.phys
    best = (math.inf, 0.0, 0.0)
    y = np.linspace(0.0, 1.0, nx)
    for t in np.linspace(0.0, horizon, nt):
        plan = planner.plan_at(float(t))
        x = y * plan.s_r
        vals = reference_temperature(plan, x).value
        i = int(np.argmin(vals))
        if vals[i] < best[0]:
            best = (float(vals[i]), float(t), float(x[i]))
    return TemperatureValidityReport(
        min_value=best[0], at_t=best[1], at_x=best[2],
        ok=best[0] >= phys.T_m - TOL_T,
    )
