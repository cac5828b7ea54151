"""Tensor quadrature over the Hua-Pickrell density."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from jointmoments import exact, quadrature
from jointmoments.errors import DivergenceError, DomainError, Method


def one_point_abs_moment(s, p):
    # E_1|x|^p for the density ~ (1 + x^2)^(-1-s)
    return math.exp(math.lgamma((p + 1) / 2) + math.lgamma(s + 0.5 - p / 2)
                    - 0.5 * math.log(math.pi) - math.lgamma(s + 0.5))


def second_moment_of_sum(s, N):
    return N * (N + 2 * s) / (4 * s * s - 1)


@pytest.mark.parametrize("alpha", [0.0, -0.4, 1.3, 3.0])
@pytest.mark.parametrize("k", [0, 1, 3])
def test_theta_grid_exact_on_polynomials(alpha, k):
    g = quadrature.theta_grid(12, alpha)
    approx = np.dot(g.weights, g.nodes ** (2 * k))
    ref, _ = integrate.quad(lambda t: t ** (2 * k) * (np.pi**2 / 4 - t * t) ** alpha,
                            -np.pi / 2, np.pi / 2, limit=200)
    assert approx == pytest.approx(ref, rel=1e-11)
    np.testing.assert_allclose(g.nodes, -g.nodes[::-1], atol=1e-15)


def test_theta_grid_guards():
    with pytest.raises(DomainError):
        quadrature.theta_grid(1)
    with pytest.raises(DivergenceError):
        quadrature.theta_grid(8, -1.0)


@pytest.mark.parametrize("s, N", [(0.0, 1), (0.3, 2), (1.0, 3), (2.0, 2), (1.5, 4)])
def test_total_mass_is_one(s, N):
    order = 16 if N == 4 else 32
    est = quadrature.hp_expectation(s, N, np.ones_like, order)
    assert est.value == pytest.approx(1.0, abs=1e-12)


@given(st.floats(min_value=0.6, max_value=6.0), st.integers(min_value=1, max_value=3))
@settings(max_examples=25, deadline=None)
def test_second_moment_of_sum(s, N):
    est = quadrature.hp_expectation(s, N, lambda y: y * y, 32, tail_power=2.0)
    assert est.value == pytest.approx(second_moment_of_sum(s, N), rel=1e-10)


def test_second_moment_of_sum_N4():
    est = quadrature.hp_expectation(2.0, 4, lambda y: y * y, 16, tail_power=2.0)
    assert est.value == pytest.approx(second_moment_of_sum(2.0, 4), rel=1e-10)


@pytest.mark.parametrize("s, p", [(1.0, 1.0), (2.0, 1.0), (0.75, 1.2), (1.0, 2.5), (0.2, 0.5)])
def test_one_point_abs_moments(s, p):
    est = quadrature.sum_power_expectation(s, 1, p)
    assert est.value == pytest.approx(one_point_abs_moment(s, p), rel=1e-12)
    assert est.metadata["converged"]


def test_joint_moment_single_matrix():
    est = quadrature.joint_moment_quadrature(1.0, 1.0, 1)
    assert est.value == pytest.approx(0.5, rel=1e-12)
    assert est.method is Method.QUADRATURE


@pytest.mark.parametrize("s, h", [(1.0, 0.3), (2.0, 1.7), (0.5, 0.5)])
def test_joint_moment_N1_closed_form(s, h):
    ref = math.exp(exact.log_F_N_s0(s, 1)) * 2 ** (-2 * h) * one_point_abs_moment(s, 2 * h)
    assert quadrature.joint_moment_quadrature(s, h, 1).value == pytest.approx(ref, rel=1e-12)


def test_finite_N_reference_values():
    # frozen from converged runs (order 32 vs 64 agree to the digits shown)
    assert quadrature.joint_moment_quadrature(1.0, 1.0, 2).value == pytest.approx(2.0, rel=1e-12)
    assert quadrature.joint_moment_quadrature(2.0, 0.5, 2).value == pytest.approx(6.684507609859599, rel=1e-10)
    est = quadrature.joint_moment_quadrature(0.75, 0.6, 3)
    assert est.value == pytest.approx(2.424280686235058, abs=5e-5)


def test_h_zero_recovers_closed_form():
    est = quadrature.joint_moment_quadrature(1.0, 0.0, 3)
    assert est.value == pytest.approx(4.0, rel=1e-12)


def test_divergent_power_rejected():
    with pytest.raises(DivergenceError):
        quadrature.sum_power_expectation(1.0, 2, 3.0)
    with pytest.raises(DivergenceError):
        quadrature.joint_moment_quadrature(1.0, 1.5, 2)


def test_divergence_detected_by_refinement():
    # E_1[x^2] is infinite at s = 0.4; an undeclared growth power must not pass silently
    with pytest.raises(DivergenceError):
        quadrature.hp_expectation(0.4, 1, lambda y: y * y, 32)


def test_size_limit():
    with pytest.raises(DomainError):
        quadrature.hp_expectation(1.0, quadrature.MAX_N + 1, np.ones_like)
    with pytest.raises(DomainError):
        quadrature.hp_expectation(1.0, 2, np.ones_like, order=8)


@pytest.mark.parametrize("t, order, tol", [(0.5, 64, 1e-5), (1.0, 64, 1e-5), (3.0, 256, 2e-5)])
def test_char_function_N1_closed_form(t, order, tol):
    # s = 1, N = 1: E[cos(t x / 2)] = (1 + t/2) exp(-t/2); the oscillation at the
    # endpoints limits the rule to algebraic convergence
    k = t / 2
    val = quadrature.char_function_N(1.0, 1, t, order=order)
    assert val.real == pytest.approx((1 + k) * math.exp(-k), abs=tol)
    assert abs(val.imag) < 1e-12


def test_char_function_N1_against_direct_integral():
    s, t = 2.5, 0.8
    c = math.exp(-exact.log_c_N(s, 1))
    ref, _ = integrate.quad(lambda x: c * math.cos(t * x / 2) * (1 + x * x) ** (-1 - s),
                            -np.inf, np.inf, limit=400)
    assert quadrature.char_function_N(s, 1, 0.0) == pytest.approx(1.0, abs=1e-14)
    assert quadrature.char_function_N(s, 1, t).real == pytest.approx(ref, abs=1e-6)


def test_char_function_curvature():
    dt = 1e-3
    phi = quadrature.char_function_N(2.0, 1, np.array([-dt, 0.0, dt])).real
    second = (phi[0] - 2 * phi[1] + phi[2]) / dt**2
    # -E_1[x^2] / 4 with E_1[x^2] = 1/3 at s = 2
    assert second == pytest.approx(-1 / 12, rel=1e-5)


def test_xi_small_t():
    s, N, t = 2.0, 2, 0.05
    xi = quadrature.xi_N(s, N, [t])[0]
    expected = -second_moment_of_sum(s, N) / (4 * N * N) * t * t
    assert xi == pytest.approx(expected, rel=1e-3)


def test_xi_derivatives_consistent():
    t = np.array([0.3, 0.6])
    xi, d1, d2 = quadrature.xi_N_derivatives(2.0, 2, t)
    xi_plus = quadrature.xi_N(2.0, 2, t + 1e-2)
    xi_minus = quadrature.xi_N(2.0, 2, t - 1e-2)
    np.testing.assert_allclose(d1, (xi_plus - xi_minus) / 2e-2, rtol=1e-3)
    np.testing.assert_allclose(d2, (xi_plus - 2 * xi + xi_minus) / 1e-4, rtol=1e-2)


@pytest.mark.parametrize("s", [1.0, 2.0, 3.5])
def test_even_moment_assembly_second(s):
    est = quadrature.even_moment_X_quadrature(s, 1, order=32)
    assert est.value == pytest.approx(1 / (4 * s * s - 1), abs=1e-10)


def test_even_moment_assembly_guards():
    with pytest.raises(DomainError):
        quadrature.even_moment_X_quadrature(4.0, 3)
    with pytest.raises(DomainError):
        quadrature.even_moment_X_quadrature(4.0, 0.5)
