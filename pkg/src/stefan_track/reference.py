"""Reference interface trajectories with exact derivatives of every order.

The planning recursion needs arbitrarily high time derivatives of the
reference interface position.  The supported family has velocity

    s_r'(t) = A (1 + cos(omega t)) e^(-delta1 t) + v_min e^(-delta2 t),

which is a finite sum of complex-exponential terms ``c * exp(z t)``.
Every derivative is therefore available in closed form by termwise
differentiation, exact to machine precision at any order, and the
position follows by termwise integration.

The constant reference (frozen interface) is kept as a degenerate member
of the same representation: an empty term list.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .jets import Jet

__all__ = [
    "ReferenceParams",
    "ReferenceTrajectory",
    "GevreyCertificate",
    "AdmissibilityReport",
    "amplitude",
    "check_admissibility",
    "estimate_gevrey",
]

#: Machine-epsilon floor used for the degenerate (identically zero velocity)
#: certificate, where any positive constants satisfy the growth bound.
_DEGENERATE_M = float(np.finfo(float).eps)
_DEGENERATE_R = 1.0e4


@dataclass(frozen=True)
class ReferenceParams:
    """Parameters of the exp-trig reference family.

    ``s_r0`` is the initial interface position, ``s_bar`` the asymptotic
    one; both must sit strictly inside the domain of length ``L``.  The
    oscillation amplitude ``A`` is derived, and the parameter set is
    rejected when it comes out non-positive.
    """

    omega: float          # rad/s
    delta1: float         # 1/s
    delta2: float         # 1/s
    v_min: float          # m/s
    s_r0: float           # m
    s_bar: float          # m
    L: float = 0.2        # m

    def __post_init__(self):
        for name in ("omega", "delta1", "delta2", "v_min"):
            if getattr(self, name) <= 0:
                raise ParameterError(f"reference parameter {name} must be > 0")
        if not 0 < self.s_r0 < self.s_bar:
            raise ParameterError("reference requires 0 < s_r0 < s_bar")
        if not self.s_bar < self.L:
            raise ParameterError(
                "reference requires s_bar < L (asymptotic interface inside the domain)"
            )
        amplitude(self)  # raises if the derived A is non-positive


def amplitude(p: ReferenceParams) -> float:
    """Oscillation amplitude A making the trajectory reach ``s_bar``.

    Solves the terminal condition of the velocity family for A:
    the net displacement of the A-terms must equal
    ``s_bar - s_r0 - v_min/delta2``.
    """
    numer = p.s_bar - p.s_r0 - p.v_min / p.delta2
    denom = p.delta1 / (p.delta1**2 + p.omega**2) + 1.0 / p.delta1
    a = numer / denom
    if a <= 0:
        raise ParameterError(
            "derived amplitude A must be > 0: requires s_bar - s_r0 > v_min/delta2 "
            f"(got A = {a:.6g} m/s)"
        )
    return a


class ReferenceTrajectory:
    """Interface reference position with closed-form derivatives.

    Internally the velocity is a sum of terms ``Re(c * exp(z t))`` with
    complex ``(c, z)`` pairs, so ``derivative(t, m)`` is exact for any m.
    """

    def __init__(self, terms: list[tuple[complex, complex]], s_r0: float, s_bar: float):
        self._c = np.array([c for c, _ in terms], dtype=complex)
        self._z = np.array([z for _, z in terms], dtype=complex)
        self.s_r0 = float(s_r0)
        self.s_bar = float(s_bar)
        self.params: ReferenceParams | None = None

    @classmethod
    def from_params(cls, p: ReferenceParams) -> "ReferenceTrajectory":
        a = amplitude(p)
        terms = [
            (complex(a), complex(-p.delta1)),
            (complex(a), complex(-p.delta1, p.omega)),
            (complex(p.v_min), complex(-p.delta2)),
        ]
        traj = cls(terms, p.s_r0, p.s_bar)
        traj.params = p
        return traj

    @classmethod
    def constant(cls, s_r0: float) -> "ReferenceTrajectory":
        """Frozen interface: position ``s_r0`` forever, all derivatives zero."""
        if s_r0 <= 0:
            raise ParameterError("constant reference requires s_r0 > 0")
        return cls([], s_r0, s_r0)

    @property
    def is_constant(self) -> bool:
        return self._c.size == 0

    def position(self, t):
        """s_r(t), vectorized over t."""
        t = np.asarray(t, dtype=float)
        if self.is_constant:
            return np.broadcast_to(self.s_r0, t.shape).copy() if t.ndim else self.s_r0
        tt = t[..., None]
        val = self.s_r0 + np.sum(
            (self._c * (np.exp(self._z * tt) - 1.0) / self._z).real, axis=-1
        )
        return val if t.ndim else float(val)

    def derivative(self, t, m: int = 1):
        """The m-th time derivative of s_r (m = 0 gives the position)."""
        if m < 0:
            raise ValueError("derivative order must be >= 0")
        if m == 0:
            return self.position(t)
        t = np.asarray(t, dtype=float)
        if self.is_constant:
            return np.zeros(t.shape) if t.ndim else 0.0
        tt = t[..., None]
        val = np.sum((self._c * self._z ** (m - 1) * np.exp(self._z * tt)).real, axis=-1)
        return val if t.ndim else float(val)

    def velocity(self, t):
        return self.derivative(t, 1)

    def velocity_coeffs(self, t, order: int) -> np.ndarray:
        """Normalized jet coefficients of the velocity at times ``t``.

        Row j holds ``s_r^(j+1)(t) / j!``; shape ``(order+1,) + t.shape``.
        """
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.zeros((order + 1,) + t.shape)
        if not self.is_constant:
            expzt = np.exp(self._z * t[..., None])  # t.shape + (terms,)
            fact = 1.0
            zpow = np.ones_like(self._z)
            for j in range(order + 1):
                if j > 0:
                    fact *= j
                    zpow = zpow * self._z
                out[j] = np.sum((self._c * zpow * expzt).real, axis=-1) / fact
        return out

    def velocity_jet(self, t: float, order: int) -> Jet:
        return Jet(self.velocity_coeffs(float(t), order)[:, 0])

    def decay_scale(self) -> float:
        """Slowest decay time constant of the family, in seconds."""
        if self.is_constant:
            return 1.0
        rates = -self._z.real
        rates = rates[rates > 0]
        return float(1.0 / rates.min()) if rates.size else 1.0


@dataclass(frozen=True)
class AdmissibilityReport:
    """Checkable admissibility of a reference trajectory."""

    starts_positive: bool
    velocity_nonnegative: bool
    limit_inside_domain: bool
    min_velocity: float
    min_velocity_time: float

    @property
    def all_ok(self) -> bool:
        return self.starts_positive and self.velocity_nonnegative and self.limit_inside_domain


def check_admissibility(
    ref: ReferenceTrajectory, L: float, horizon: float, samples: int = 10_000
) -> AdmissibilityReport:
    """Sampled check that the reference is usable for planning.

    Requires a positive start, a nowhere-decreasing position, and an
    asymptotic position strictly inside the domain.
    """
    if horizon <= 0:
        raise ParameterError("admissibility horizon must be > 0")
    t = np.linspace(0.0, horizon, samples)
    v = np.asarray(ref.velocity(t))
    i = int(np.argmin(v))
    # Slack for roundoff in the complex-exponential evaluation; the constant
    # reference still passes marginally with v identically zero.
    tol = 1e-14 * max(1.0, float(np.max(np.abs(v))))
    return AdmissibilityReport(
        starts_positive=ref.s_r0 > 0,
        velocity_nonnegative=bool(v[i] >= -tol),
        limit_inside_domain=ref.s_bar < L,
        min_velocity=float(v[i]),
        min_velocity_time=float(t[i]),
    )


@dataclass(frozen=True)
class GevreyCertificate:
    """Derivative-growth certificate ``|s_r^(m+1)(t)| <= M (m!)^d / R^m``.

    ``M`` carries m/s, ``R`` seconds, and ``d`` in [1, 2] is the growth
    order; ``m_max`` is the highest order validated against samples.
    A ``degenerate`` certificate marks the identically-zero velocity,
    where the bound is vacuous and M falls back to a machine-eps floor.
    """

    M: float
    R: float
    d: float
    m_max: int
    degenerate: bool = False
    max_ratio: float = 0.0  # worst sampled |s^(m+1)| / bound, <= 1 when valid
    sample_times: np.ndarray = field(default=None, repr=False, compare=False)

    def validate(self, ref: ReferenceTrajectory, times=None, rtol: float = 1e-9) -> float:
        """Re-check the bound on a time grid; returns the worst ratio."""
        t = np.asarray(self.sample_times if times is None else times, dtype=float)
        worst = 0.0
        for m in range(self.m_max + 1):
            bound = self.M * math.factorial(m) ** self.d / self.R**m
            sup = float(np.max(np.abs(ref.derivative(t, m + 1))))
            worst = max(worst, sup / bound)
        if worst > 1.0 + rtol:
            raise ParameterError(
                f"Gevrey certificate violated on samples: ratio {worst:.6g} > 1"
            )
        return worst


def _gevrey_grid(ref: ReferenceTrajectory, t_samples: int) -> np.ndarray:
    # Log-spaced grid: derivative envelopes decay monotonically after an
    # initial transient, so early times need the density.
    horizon = 5.0 * ref.decay_scale()
    return np.concatenate([[0.0], np.geomspace(1e-2, horizon, t_samples - 1)])


def estimate_gevrey(
    ref: ReferenceTrajectory,
    d: float = 2.0,
    m_max: int = 10,
    t_samples: int = 1000,
) -> GevreyCertificate:
    """Fit (M, R) for the derivative-growth bound by a two-pass sampling fit.

    First pass pins ``M`` to the velocity supremum (the m = 0 bound holds
    with equality there); second pass takes the largest R compatible with
    every sampled derivative order up to ``m_max``.  The returned
    certificate is re-validated against the full sample set.
    """
    if not 1.0 <= d <= 2.0:
        raise ParameterError("Gevrey order parameter d must lie in [1, 2]")
    if m_max < 2:
        raise ParameterError("m_max must be >= 2")

    t = _gevrey_grid(ref, t_samples)
    sup = np.empty(m_max + 1)
    for m in range(m_max + 1):
        vals = np.abs(np.asarray(ref.derivative(t, m + 1)))
        if not np.all(np.isfinite(vals)):
            # Derivative overflow: shrink the fit range and flag it.
            m_max = m - 1
            sup = sup[:m_max + 1]
            break
        sup[m] = vals.max()

    if sup[0] == 0.0:
        return GevreyCertificate(
            M=_DEGENERATE_M, R=_DEGENERATE_R, d=d, m_max=m_max,
            degenerate=True, max_ratio=0.0, sample_times=t,
        )

    M = float(sup[0])
    r_candidates = [
        (M * math.factorial(m) ** d / sup[m]) ** (1.0 / m)
        for m in range(1, m_max + 1)
        if sup[m] > 0.0
    ]
    R = float(min(r_candidates)) if r_candidates else _DEGENERATE_R

    cert = GevreyCertificate(M=M, R=R, d=d, m_max=m_max, sample_times=t)
    worst = cert.validate(ref)
    return GevreyCertificate(
        M=M, R=R, d=d, m_max=m_max, degenerate=False, max_ratio=worst, sample_times=t,
    )
