"""Truncated Taylor-series (jet) arithmetic.

A jet stores the normalized Taylor coefficients of a smooth scalar
function about an expansion point: ``coeffs[k] = f^(k)(t0) / k!``.
Normalizing by ``k!`` keeps high-order entries representable in double
precision where raw derivatives would overflow.

Arithmetic on jets of different order truncates to the shorter operand;
the coefficient recursion in the planner consumes one derivative order
per differentiation, so descending orders are the normal case, not an
error.

The ``*_coeffs`` kernels operate on plain arrays whose leading axis is
the coefficient order.  They accept trailing batch axes (e.g. a time
grid), which is how the planner vectorizes the recursion.  The ``Jet``
class is a thin single-point wrapper over the same kernels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Jet",
    "jet_add",
    "jet_mul",
    "jet_derivative",
    "jet_truncate",
    "add_coeffs",
    "mul_coeffs",
    "diff_coeffs",
]


def add_coeffs(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Coefficient-wise sum, truncated to the shorter operand."""
    n = min(a.shape[0], b.shape[0])
    return a[:n] + b[:n]


def mul_coeffs(a: np.ndarray, b: np.ndarray, out_len: int | None = None) -> np.ndarray:
    """Cauchy product of normalized coefficient arrays.

    Normalized coefficients multiply like polynomial coefficients:
    ``c[k] = sum_j a[j] * b[k-j]``.  The result is truncated to the
    shorter operand unless ``out_len`` asks for less.
    """
    n = min(a.shape[0], b.shape[0])
    if out_len is not None:
        n = min(n, out_len)
    shape = (n,) + np.broadcast_shapes(a.shape[1:], b.shape[1:])
    c = np.zeros(shape)
    for k in range(n):
        for j in range(k + 1):
            c[k] += a[j] * b[k - j]
    return c


def diff_coeffs(a: np.ndarray) -> np.ndarray:
    """Time-derivative of a normalized coefficient array (drops one order)."""
    if a.shape[0] < 2:
        raise ValueError("cannot differentiate an order-0 jet: derivative information exhausted")
    k = np.arange(1, a.shape[0])
    return a[1:] * k.reshape((-1,) + (1,) * (a.ndim - 1))


@dataclass(frozen=True)
class Jet:
    """Taylor coefficients of a scalar function at a single point.

    ``coeffs[k]`` holds ``f^(k)(t0) / k!``; ``order`` is ``len(coeffs) - 1``.
    """

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coeffs, dtype=float))
        if c.ndim != 1:
            raise ValueError("jet coefficients must be one-dimensional")
        if not np.all(np.isfinite(c)):
            raise ValueError("jet coefficients must be finite")
        object.__setattr__(self, "coeffs", c)

    @property
    def order(self) -> int:
        return self.coeffs.shape[0] - 1

    @property
    def value(self) -> float:
        return float(self.coeffs[0])

    def derivative_value(self, m: int) -> float:
        """The raw m-th derivative at the expansion point (coefficient times m!)."""
        if not 0 <= m <= self.order:
            raise ValueError(f"derivative order {m} outside stored range 0..{self.order}")
        return float(self.coeffs[m]) * math.factorial(m)


def jet_add(a: Jet, b: Jet) -> Jet:
    return Jet(add_coeffs(a.coeffs, b.coeffs))


def jet_mul(a: Jet, b: Jet) -> Jet:
    return Jet(mul_coeffs(a.coeffs, b.coeffs))


def jet_derivative(a: Jet) -> Jet:
    return Jet(diff_coeffs(a.coeffs))


def jet_truncate(a: Jet, order: int) -> Jet:
    """Drop coefficients above ``order`` (at most the stored order)."""
    if order < 0:
        raise ValueError("truncation order must be non-negative")
    return Jet(a.coeffs[: order + 1])
