"""Closed-form ensemble constants and the even-moment assembly.

Everything that can overflow is kept in log scale: ``c_N`` alone carries a
factor ``2^(-N^2)``.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction
from collections.abc import Mapping, Sequence

import numpy as np
from scipy import special

from .errors import DivergenceError, DomainError, Method, MomentEstimate
from .specfun import log_barnes_g, log_gamma


def _check_s(s: float) -> None:
    if not s > -0.5:
        raise DomainError(f"s must exceed -1/2, got {s}")


def _check_N(N: int) -> None:
    if int(N) != N or N < 1:
        raise DomainError(f"N must be a positive integer, got {N}")


def check_joint_range(s: float, h: float) -> None:
    """Raise unless -1/2 < h < s + 1/2 (the range where F_N(s, h) is finite)."""
    _check_s(s)
    if not (-0.5 < h < s + 0.5):
        raise DivergenceError(
            f"joint moment diverges outside -1/2 < h < s + 1/2 (s={s}, h={h})"
        )


def in_proven_range(h: float) -> bool:
    """Negative h is admitted by the estimators but the limit theorem needs h >= 0."""
    return h >= 0


def log_c_N(s: float, N: int) -> float:
    """Log of the mass of ``Delta(x)^2 prod (1 + x_j^2)^(-N-s)`` on the ordered chamber.

    The Hua-Pickrell density is this function divided by ``c_N``.
    """
    _check_s(s)
    _check_N(N)
    j = np.arange(1, N + 1)
    gamma_part = math.fsum(
        special.gammaln(2 * s + N - j + 1) - 2.0 * special.gammaln(s + N - j + 1)
    )
    return (
        N * math.log(2.0 * math.pi)
        - (N * N + 2.0 * s * N) * math.log(2.0)
        + log_barnes_g(N + 1)
        + gamma_part
    )


def log_F_N_s0(s: float, N: int) -> float:
    """ln F_N(s, 0): the 2s-th moment of |Z_U(0)| over the CUE."""
    _check_s(s)
    _check_N(N)
    return (
        log_barnes_g(N + 2 * s + 1)
        + log_barnes_g(N + 1)
        + 2.0 * log_barnes_g(s + 1)
        - 2.0 * log_barnes_g(N + s + 1)
        - log_barnes_g(2 * s + 1)
    )


def log_F_limit_s0(s: float) -> float:
    """ln F(s, 0) = ln(G(s+1)^2 / G(2s+1))."""
    _check_s(s)
    return 2.0 * log_barnes_g(s + 1) - log_barnes_g(2 * s + 1)


def single_coord_even_moment(s: float, N: int, m: int) -> float:
    """E[x^(2m)] under the density proportional to (1 + x^2)^(-(N+s))."""
    _check_s(s)
    _check_N(N)
    if m < 0 or int(m) != m:
        raise DomainError(f"m must be a nonnegative integer, got {m}")
    a = N + s
    if not m < a - 0.5:
        raise DivergenceError(f"E[x^{2 * m}] diverges for N + s = {a}")
    return math.exp(
        log_gamma(m + 0.5)
        + log_gamma(a - m - 0.5)
        - log_gamma(0.5)
        - log_gamma(a - 0.5)
    )


def _gauss_mul(a: tuple[int, int], b: tuple[int, int]) -> tuple[int, int]:
    return a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0]


def _gauss_pow(a: tuple[int, int], n: int) -> tuple[int, int]:
    out = (1, 0)
    for _ in range(n):
        out = _gauss_mul(out, a)
    return out


def elementary_symmetric_identity(z: Sequence[complex]) -> tuple[complex, complex]:
    """Both sides of ``z_1...z_N = (1/N!) sum_k (-1)^(N-k) S_k``.

    ``S_k`` sums ``(z_{i_1} + ... + z_{i_k})^N`` over all k-subsets.  Floats
    are dyadic rationals, so both sides are evaluated exactly as Gaussian
    integers scaled by a common power of two and rounded once at the end;
    the alternating sum would otherwise lose digits to cancellation.
    """
    N = len(z)
    if not 1 <= N <= 12:
        raise DomainError(f"identity is enumerated for 1 <= N <= 12, got {N}")
    parts = [(complex(v).real, complex(v).imag) for v in z]
    if not all(math.isfinite(x) for pair in parts for x in pair):
        raise DomainError("entries must be finite")
    # common scale 2^-e turning every coordinate into an integer
    e = max(x.as_integer_ratio()[1].bit_length() - 1 for pair in parts for x in pair)
    ints = [tuple(int(Fraction(x) * 2**e) for x in pair) for pair in parts]
    lhs = (1, 0)
    for v in ints:
        lhs = _gauss_mul(lhs, v)
    rhs = [0, 0]
    for k in range(1, N + 1):
        sign = (-1) ** (N - k)
        for sub in itertools.combinations(ints, k):
            a, b = _gauss_pow((sum(v[0] for v in sub), sum(v[1] for v in sub)), N)
            rhs[0] += sign * a
            rhs[1] += sign * b
    scale = Fraction(1, 2 ** (e * N))
    rscale = scale / math.factorial(N)

    def to_complex(pair, c):
        return complex(float(pair[0] * c), float(pair[1] * c))

    return to_complex(lhs, scale), to_complex(rhs, rscale)


def even_moment_X(s: float, h: int, expectations: Mapping[int, float]) -> float:
    """E[X(s)^(2h)] from the finite-N moments ``E_k[(x_1+...+x_k)^(2h)]``.

    ``expectations`` maps k = 1..2h to the corresponding Hua-Pickrell
    expectation (for instance from :func:`jointmoments.quadrature.hp_expectation`).
    """
    _check_s(s)
    if h < 1 or int(h) != h:
        raise DomainError(f"h must be a positive integer, got {h}")
    if not s > h - 0.5:
        raise DivergenceError(f"E[X(s)^{2 * h}] is infinite unless s > {h - 0.5}")
    missing = [k for k in range(1, 2 * h + 1) if k not in expectations]
    if missing:
        raise DomainError(f"missing E_k for k = {missing}")
    n = 2 * h
    total = math.fsum(
        (-1) ** (n - k) * math.comb(n, k) * float(expectations[k])
        for k in range(1, n + 1)
    )
    return total / math.factorial(n)


def even_moment_X_error(h: int, errors: Mapping[int, float]) -> float:
    """Worst-case propagation of the E_k errors through :func:`even_moment_X`."""
    n = 2 * h
    return math.fsum(math.comb(n, k) * abs(errors[k]) for k in range(1, n + 1)) / math.factorial(n)


def primes_up_to(P: int) -> np.ndarray:
    sieve = np.ones(P + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, int(P**0.5) + 1):
        if sieve[p]:
            sieve[p * p :: p] = False
    return np.flatnonzero(sieve)


def _log_euler_factors(s: float, primes: np.ndarray, M: int) -> np.ndarray:
    # c_m = Gamma(m+s)/(m! Gamma(s)) = (s)_m / m!, built by recurrence so s = 0 works
    c = np.empty(M + 1)
    c[0] = 1.0
    for m in range(1, M + 1):
        c[m] = c[m - 1] * (m - 1 + s) / m
    inv_p = 1.0 / primes.astype(float)
    # Horner in 1/p keeps the small-p sums accurate
    series = np.zeros_like(inv_p)
    for m in range(M, -1, -1):
        series = series * inv_p + c[m] ** 2
    return s * s * np.log1p(-inv_p) + np.log(series)


def arithmetic_constant(
    s: float, prime_cutoff: int = 100_000, series_cutoff: int = 60
) -> MomentEstimate:
    """Truncated Euler product for the arithmetic factor a(s).

    The error bar extrapolates the last prime's log-factor ``~ C/p^2`` over
    all larger primes, ``sum_{p > P} C/p^2 ~ C / (P ln P)``.
    """
    _check_s(s)
    if prime_cutoff < 2 or series_cutoff < 2:
        raise DomainError("cutoffs must be at least 2")
    primes = primes_up_to(int(prime_cutoff))
    logs = _log_euler_factors(s, primes, int(series_cutoff))
    log_a = math.fsum(logs)
    p_last = float(primes[-1])
    c_last = abs(logs[-1]) * p_last**2
    tail = c_last / (p_last * math.log(p_last))
    value = math.exp(log_a)
    return MomentEstimate(
        value=value,
        abs_error=value * math.expm1(tail),
        method=Method.CLOSED_FORM,
        metadata={
            "prime_cutoff": int(prime_cutoff),
            "series_cutoff": int(series_cutoff),
            "n_primes": int(primes.size),
            "log_value": log_a,
        },
    )


def zeta_prediction(s: float, h: float, E_abs_moment: float, a_s: float | None = None) -> float:
    """Predicted leading coefficient a(s) F(s,0) 2^(-2h) E|X(s)|^(2h)."""
    check_joint_range(s, h)
    if a_s is None:
        a_s = arithmetic_constant(s).value
    return a_s * math.exp(log_F_limit_s0(s)) * 2.0 ** (-2.0 * h) * E_abs_moment
