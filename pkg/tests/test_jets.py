import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stefan_track.jets import Jet, jet_add, jet_derivative, jet_mul, jet_truncate


def sin_jet(t0, order):
    return Jet([math.sin(t0 + k * math.pi / 2) / math.factorial(k) for k in range(order + 1)])


def cos_jet(t0, order):
    return Jet([math.cos(t0 + k * math.pi / 2) / math.factorial(k) for k in range(order + 1)])


def exp_cos_jet(a, b, t0, order):
    # d^k/dt^k e^(a t) cos(b t) = Re((a+ib)^k e^((a+ib) t))
    z = complex(a, b)
    return Jet([
        (z**k * np.exp(z * t0)).real / math.factorial(k) for k in range(order + 1)
    ])


def test_add_componentwise():
    c = jet_add(Jet([1.0, 2.0, 3.0]), Jet([4.0, 5.0, 6.0]))
    assert np.array_equal(c.coeffs, [5.0, 7.0, 9.0])


def test_add_zero_identity():
    a = Jet([1.5, -0.25, 3.75])
    z = Jet(np.zeros(3))
    assert np.array_equal(jet_add(a, z).coeffs, a.coeffs)


def test_add_sin_plus_cos_matches_closed_form():
    t0, order = 0.3, 6
    total = jet_add(sin_jet(t0, order), cos_jet(t0, order))
    expect = [
        (math.sin(t0 + k * math.pi / 2) + math.cos(t0 + k * math.pi / 2)) / math.factorial(k)
        for k in range(order + 1)
    ]
    np.testing.assert_allclose(total.coeffs, expect, atol=1e-12)


def test_mul_polynomial_identity():
    # (1 + t)(1 - t) = 1 - t^2
    c = jet_mul(Jet([1.0, 1.0, 0.0]), Jet([1.0, -1.0, 0.0]))
    assert np.array_equal(c.coeffs, [1.0, 0.0, -1.0])


def test_mul_by_constant_scales():
    a = Jet([2.0, -1.0, 0.5, 4.0])
    c = jet_mul(Jet([3.0, 0.0, 0.0, 0.0]), a)
    np.testing.assert_allclose(c.coeffs, 3.0 * a.coeffs, rtol=1e-15)


def test_mul_exp_times_cos_matches_closed_form():
    a, b, t0, order = 0.7, 1.3, 0.5, 8
    exp_jet = Jet([
        (a**k) * math.exp(a * t0) / math.factorial(k) for k in range(order + 1)
    ])
    product = jet_mul(exp_jet, cos_jet_at(b, t0, order))
    expect = exp_cos_jet(a, b, t0, order)
    np.testing.assert_allclose(product.coeffs, expect.coeffs, rtol=1e-10)


def cos_jet_at(b, t0, order):
    return Jet([
        (b**k) * math.cos(b * t0 + k * math.pi / 2) / math.factorial(k)
        for k in range(order + 1)
    ])


def test_mixed_order_truncates_to_shorter():
    a = Jet([1.0, 2.0, 3.0, 4.0])
    b = Jet([1.0, 1.0])
    assert jet_add(a, b).order == 1
    assert jet_mul(a, b).order == 1


def test_derivative_definition():
    d = jet_derivative(Jet([5.0, 2.0, 3.0]))
    assert np.array_equal(d.coeffs, [2.0, 6.0])


def test_derivative_sin_is_cos():
    d = jet_derivative(sin_jet(0.0, 5))
    np.testing.assert_allclose(d.coeffs, cos_jet(0.0, 4).coeffs, atol=1e-15)


def test_derivative_order_zero_rejected():
    with pytest.raises(ValueError):
        jet_derivative(Jet([1.0]))


def test_second_derivative_matches_finite_difference():
    # e^(-delta t) cos(omega t) at t = 100 s; the oracle differentiates the
    # closed-form first derivative by central differences.
    delta, omega, t0, h = 4.0e-3, 2.0e-2, 100.0, 1e-3
    z = complex(-delta, omega)

    def first_deriv(t):
        return (z * np.exp(z * t)).real

    jet = exp_cos_jet(-delta, omega, t0, 6)
    second = jet_derivative(jet_derivative(jet)).value
    oracle = (first_deriv(t0 + h) - first_deriv(t0 - h)) / (2 * h)
    assert abs(second - oracle) <= 1e-6 * abs(oracle)


def test_coefficients_must_be_finite():
    with pytest.raises(ValueError):
        Jet([1.0, float("nan")])
    with pytest.raises(ValueError):
        Jet([np.inf])


def test_derivative_value_rescales_by_factorial():
    j = Jet([1.0, 2.0, 3.0, 4.0])
    assert j.derivative_value(0) == 1.0
    assert j.derivative_value(2) == 3.0 * 2
    assert j.derivative_value(3) == 4.0 * 6
    with pytest.raises(ValueError):
        j.derivative_value(4)


coeff_lists = st.lists(
    st.floats(min_value=-10, max_value=10, allow_nan=False), min_size=2, max_size=9
)


@given(coeff_lists, coeff_lists)
@settings(max_examples=200)
def test_mul_matches_exact_polynomial_product(a, b):
    pa, pb = Jet(a), Jet(b)
    got = jet_mul(pa, pb).coeffs
    exact = np.convolve(a, b)[: len(got)]
    scale = max(1.0, float(np.max(np.abs(exact))))
    np.testing.assert_allclose(got, exact, atol=1e-12 * scale)


@given(coeff_lists, coeff_lists)
@settings(max_examples=200)
def test_leibniz_rule(a, b):
    pa, pb = Jet(a), Jet(b)
    lhs = jet_derivative(jet_mul(pa, pb))
    rhs = jet_add(
        jet_mul(jet_derivative(pa), jet_truncate(pb, pb.order - 1)),
        jet_mul(jet_truncate(pa, pa.order - 1), jet_derivative(pb)),
    )
    scale = max(1.0, float(np.max(np.abs(lhs.coeffs))))
    np.testing.assert_allclose(lhs.coeffs, rhs.coeffs, atol=1e-12 * scale)


@pytest.mark.parametrize("order", [4, 7, 10])
def test_round_trip_analytic_functions(order):
    # exp, sin, and their product carry known coefficients at t0 = 0.2.
    t0 = 0.2
    e = Jet([math.exp(t0) / math.factorial(k) for k in range(order + 1)])
    s = sin_jet(t0, order)
    prod = jet_mul(e, s)
    z = complex(1.0, 1.0)  # e^t sin t = Im e^((1+i)t)
    expect = [(z**k * np.exp(z * t0)).imag / math.factorial(k) for k in range(order + 1)]
    np.testing.assert_allclose(prod.coeffs, expect, rtol=1e-10)
