"""Closed forms, the moment assembly and the arithmetic factor."""

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from jointmoments import exact
from jointmoments.errors import DivergenceError, DomainError, MomentEstimate


@pytest.mark.parametrize("N", range(1, 51))
def test_F_N_at_s1_is_N_plus_1(N):
    assert math.exp(exact.log_F_N_s0(1.0, N)) == pytest.approx(N + 1, rel=1e-10)


def test_F_limit_values():
    assert math.exp(exact.log_F_limit_s0(0.0)) == pytest.approx(1.0, rel=1e-14)
    assert math.exp(exact.log_F_limit_s0(1.0)) == pytest.approx(1.0, rel=1e-12)
    assert math.exp(exact.log_F_limit_s0(2.0)) == pytest.approx(1 / 12, rel=1e-12)


@pytest.mark.parametrize("s, N", [(0.5, 3), (1.3, 4), (2.0, 10), (0.25, 7)])
def test_F_N_matches_mpmath_barnes(s, N):
    G = mpmath.barnesg
    ref = G(N + 2 * s + 1) * G(N + 1) * G(s + 1) ** 2 / (G(N + s + 1) ** 2 * G(2 * s + 1))
    assert math.exp(exact.log_F_N_s0(s, N)) == pytest.approx(float(ref), rel=1e-11)


@pytest.mark.parametrize("s", [0.3, 1.0, 2.0])
def test_F_N_scaling_limit(s):
    N = 4000
    ratio = exact.log_F_N_s0(s, N) - s * s * math.log(N)
    # leading correction is O(s^3 / N)
    assert ratio == pytest.approx(exact.log_F_limit_s0(s), abs=2 * max(s, 1.0) ** 3 / N)


@pytest.mark.parametrize("s", [0.0, 0.5, 1.0, 2.5])
def test_c_1_is_one_point_mass(s):
    # c_N is the mass of the unnormalised density on the ordered chamber
    total, _ = integrate.quad(lambda x: (1 + x * x) ** (-1 - s), -np.inf, np.inf)
    assert math.exp(exact.log_c_N(s, 1)) == pytest.approx(total, rel=1e-9)


def test_c_2_is_chamber_mass():
    s = 1.0
    f = lambda y, x: (x - y) ** 2 * ((1 + x * x) * (1 + y * y)) ** (-2 - s)  # noqa: E731
    # symmetric integrand: half the plane integral is the chamber mass
    plane, _ = integrate.dblquad(f, -np.inf, np.inf, -np.inf, np.inf)
    total = plane / 2
    assert math.exp(exact.log_c_N(s, 2)) == pytest.approx(total, rel=1e-9)


@pytest.mark.parametrize("s, N, m", [(1.0, 1, 0), (1.0, 1, 1), (2.0, 3, 2), (0.4, 2, 1)])
def test_single_coord_moment(s, N, m):
    a = N + s
    num, _ = integrate.quad(lambda x: x ** (2 * m) * (1 + x * x) ** (-a), -np.inf, np.inf)
    den, _ = integrate.quad(lambda x: (1 + x * x) ** (-a), -np.inf, np.inf)
    assert exact.single_coord_even_moment(s, N, m) == pytest.approx(num / den, rel=1e-8)


def test_single_coord_divergent():
    with pytest.raises(DivergenceError):
        exact.single_coord_even_moment(0.0, 1, 1)


complex_entry = st.complex_numbers(max_magnitude=10.0, allow_nan=False, allow_infinity=False)


@given(st.lists(complex_entry, min_size=1, max_size=8))
@settings(max_examples=100, deadline=None)
def test_elementary_symmetric_identity(z):
    lhs, rhs = exact.elementary_symmetric_identity(z)
    assert abs(lhs - rhs) <= 1e-12 * max(abs(lhs), 1e-300) or lhs == rhs


def test_identity_integers():
    assert exact.elementary_symmetric_identity([1, 2, 3]) == (6, 6)
    with pytest.raises(DomainError):
        exact.elementary_symmetric_identity([])


@given(st.floats(min_value=0.55, max_value=8.0))
@settings(max_examples=40, deadline=None)
def test_second_moment_assembly(s):
    # E_k[(sum x)^2] = k (k + 2s) / (4 s^2 - 1)
    E = {k: k * (k + 2 * s) / (4 * s * s - 1) for k in (1, 2)}
    assert exact.even_moment_X(s, 1, E) == pytest.approx(1 / (4 * s * s - 1), rel=1e-12)


def test_moment_assembly_guards():
    with pytest.raises(DivergenceError):
        exact.even_moment_X(0.5, 1, {1: 1.0, 2: 1.0})
    with pytest.raises(DomainError):
        exact.even_moment_X(2.0, 2, {1: 1.0})
    assert exact.even_moment_X_error(1, {1: 1.0, 2: 1.0}) == pytest.approx(1.5)


def test_joint_range():
    exact.check_joint_range(1.0, 1.49)
    with pytest.raises(DivergenceError):
        exact.check_joint_range(1.0, 1.5)
    with pytest.raises(DivergenceError):
        exact.check_joint_range(1.0, -0.5)
    assert not exact.in_proven_range(-0.2)


def test_primes():
    assert list(exact.primes_up_to(30)) == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]


def test_arithmetic_constant_at_one_is_one():
    a = exact.arithmetic_constant(1.0, prime_cutoff=10_000)
    assert isinstance(a, MomentEstimate)
    assert a.value == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("s", [0.5, 2.0])
def test_arithmetic_constant_direct_product(s):
    # Euler factor (1 - 1/p)^(s^2) sum_m (Gamma(m+s)/(m! Gamma(s)))^2 p^-m, hypergeometric in closed form
    P = 2000
    logs = []
    for p in exact.primes_up_to(P):
        series = mpmath.hyp2f1(s, s, 1, 1.0 / p)
        logs.append(float(s * s * mpmath.log(1 - 1.0 / p) + mpmath.log(series)))
    a = exact.arithmetic_constant(s, prime_cutoff=P)
    assert a.value == pytest.approx(math.exp(math.fsum(logs)), rel=1e-12)
    full = exact.arithmetic_constant(s, prime_cutoff=200_000)
    assert abs(full.value - a.value) <= 3 * a.abs_error + 1e-12


def test_zeta_prediction_half_integer():
    target = (math.e**2 - 5) / (2 * math.pi)
    pred = exact.zeta_prediction(1.0, 0.5, target, a_s=1.0)
    assert pred == pytest.approx((math.e**2 - 5) / (4 * math.pi), rel=1e-14)
