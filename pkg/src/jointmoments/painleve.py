"""Sigma-Painleve III' route to the moments of X(s).

The characteristic-function log-derivative ``Xi(t) = t d/dt log E exp(i t X/2)``
solves

    (t tau'')^2 = -4 t tau'^3 + (4 s^2 + 4 tau) tau'^2 + t tau' - tau,
    tau(0) = tau'(0) = 0,

and the even moments follow from the Taylor coefficients of
``exp(int_0^t tau(x)/x dx)``.  For integer s the same generating function is
``e^{-t/2} t^{-s^2/2} det(I_{i+j-1}(2 sqrt t))``, expanded here in exact
rational arithmetic.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.integrate import solve_ivp

from .errors import BranchError, ConvergenceError, DomainError, Method, MomentEstimate
from .specfun import bessel_i_sqrt_series

MAX_TRUNCATION = 40
MAX_DET_ORDER = 6
_RESONANCE_TOL = 1e-12


@dataclass
class PowerSeries:
    """Truncated Taylor series ``sum_{k<=K} coeffs[k] t^k``.

    ``exact`` optionally holds the same coefficients as Fractions.
    """

    coeffs: np.ndarray
    exact: list[Fraction] | None = field(default=None, repr=False)

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.ndim != 1 or self.coeffs.size < 1:
            raise DomainError("coefficients must be a nonempty vector")

    @property
    def K(self) -> int:
        return self.coeffs.size - 1

    def __call__(self, t, derivative: int = 0):
        c = np.polynomial.polynomial.polyder(self.coeffs, derivative) if derivative else self.coeffs
        return np.polynomial.polynomial.polyval(t, c)

    def truncation_error(self, t: float) -> float:
        """Size of the last kept nonzero term at radius ``t``."""
        nz = np.flatnonzero(self.coeffs)
        if nz.size == 0:
            return 0.0
        k = nz[-1]
        return float(abs(self.coeffs[k]) * abs(t) ** k)

    def exp(self) -> "PowerSeries":
        return PowerSeries(series_exp(self.coeffs))

    def log(self) -> "PowerSeries":
        return PowerSeries(series_log(self.coeffs))


def series_exp(b: Sequence[float]) -> np.ndarray:
    """Coefficients of exp(sum b_k t^k) for b_0 = 0, via n E_n = sum k b_k E_{n-k}."""
    b = np.asarray(b, dtype=float)
    if b[0] != 0.0:
        raise DomainError("series_exp expects a zero constant term")
    K = b.size - 1
    E = np.zeros(K + 1)
    E[0] = 1.0
    k = np.arange(K + 1)
    for n in range(1, K + 1):
        E[n] = np.dot(k[1:n + 1] * b[1:n + 1], E[n - 1::-1][:n]) / n
    return E


def series_log(E: Sequence[float]) -> np.ndarray:
    """Inverse of :func:`series_exp` for E_0 = 1."""
    E = np.asarray(E, dtype=float)
    if E[0] != 1.0:
        raise DomainError("series_log expects a unit constant term")
    K = E.size - 1
    b = np.zeros(K + 1)
    for n in range(1, K + 1):
        acc = n * E[n]
        for k in range(1, n):
            acc -= k * b[k] * E[n - k]
        b[n] = acc / n
    return b


def _mul(a: np.ndarray, b: np.ndarray, K: int) -> np.ndarray:
    return np.convolve(a, b)[: K + 1]


def sigma_residual_series(s: float, tau: np.ndarray) -> np.ndarray:
    """Taylor coefficients of LHS - RHS of the sigma equation for a truncated tau."""
    K = tau.size - 1
    k = np.arange(K + 1)
    d1 = np.zeros(K + 1)
    d1[:-1] = (k[1:] * tau[1:])
    t_d2 = np.zeros(K + 1)  # t tau''
    t_d2[1:K] = k[2:] * (k[2:] - 1) * tau[2:]
    t_d1 = np.zeros(K + 1)  # t tau'
    t_d1[1:] = d1[:-1]
    lhs = _mul(t_d2, t_d2, K)
    d1sq = _mul(d1, d1, K)
    cube = np.zeros(K + 1)
    cube[1:] = _mul(d1sq, d1, K)[:-1]  # t tau'^3
    rhs = -4.0 * cube + 4.0 * s * s * d1sq + 4.0 * _mul(tau, d1sq, K) + t_d1 - tau
    return lhs - rhs


def tail_resonance_coefficient(s: float) -> float:
    """Coefficient of t^(2s+1) in Xi(t), t > 0, for integer s.

    The one-point density of the limiting process decays like
    ``c |x|^(-2s-2)`` with ``c = 2^(2-2s) const / (Gamma(s+1/2)^2 (2s+1))``;
    the sum X(s) inherits that tail, which puts ``-c pi |u|^a / (sin(pi a/2) a!)``
    (``a = 2s+1``, ``u = t/2``) into the characteristic function.
    """
    from .kernel import CORRELATION_FACTOR, diagonal_constant

    if int(s) != s or s < 1:
        raise DomainError("the resonant coefficient is tied to integer s")
    a = 2 * int(s) + 1
    c = CORRELATION_FACTOR * diagonal_constant(s) * 2.0 ** (1 - 2 * s) / (
        math.gamma(s + 0.5) ** 2 * (2 * s + 1)
    )
    return -c * math.pi * 2.0 ** (-a) / (math.sin(math.pi * a / 2) * math.gamma(a))


def sigma_piii_series(s: float, K: int = 20, resonance_coefficient: float | None = None) -> PowerSeries:
    """Non-trivial power-series solution tau = sum_{k>=2} a_k t^k, t >= 0.

    Order t^2 fixes ``a_2 = -1/(4(4s^2-1))``; every later order is linear in
    the new coefficient with slope ``(n-1-2s)(n-1+2s)/(1-4s^2)``.  At the
    resonance ``n = 2s+1`` the residual has to vanish on its own and the
    coefficient is free: it carries the heavy tail of X(s) and does not affect
    moments of order below 2s+1.  By default integer s gets the value from
    :func:`tail_resonance_coefficient`; any other resonance gets 0 (the even
    member).  For non-integer s the exponent 2s+1 is not an integer, so this
    series is the analytic member and matches Xi only to order t^(2s+1).
    """
    if not 2 <= K <= MAX_TRUNCATION:
        raise DomainError(f"truncation must lie in [2, {MAX_TRUNCATION}]")
    if abs(4.0 * s * s - 1.0) < 1e-12:
        raise BranchError("s = +-1/2 makes the leading coefficient singular")
    a2 = -1.0 / (4.0 * (4.0 * s * s - 1.0))
    if a2 == 0.0:
        raise BranchError("series collapsed onto the trivial solution")
    tau = np.zeros(K + 1)
    tau[2] = a2
    for n in range(3, K + 1):
        r = sigma_residual_series(s, tau)[n]
        slope = ((n - 1 - 2 * s) * (n - 1 + 2 * s)) / (1.0 - 4.0 * s * s)
        if abs(slope) < _RESONANCE_TOL:
            scale = max(1.0, float(np.max(np.abs(tau))))
            if abs(r) > 1e-9 * scale:
                raise BranchError(f"resonance at order {n} with nonzero residual {r:.3e}")
            if resonance_coefficient is not None:
                tau[n] = resonance_coefficient
            elif float(s).is_integer():
                tau[n] = tail_resonance_coefficient(s)
            continue
        tau[n] = -r / slope
    return PowerSeries(tau)


def moments_from_tau(s: float, series: PowerSeries, h: int) -> float:
    """E[X(s)^(2h)] = 2^(2h) (-1)^h (2h)! [t^(2h)] exp(sum_k a_k t^k / k)."""
    if h < 0 or int(h) != h:
        raise DomainError("h must be a nonnegative integer")
    h = int(h)
    if 2 * h > series.K:
        raise DomainError(f"need truncation >= {2 * h}, have {series.K}")
    if not s > h - 0.5:
        raise DomainError(f"E[X(s)^{2 * h}] is infinite unless s > {h - 0.5}")
    a = series.coeffs
    k = np.arange(1, a.size)
    b = np.zeros_like(a)
    b[1:] = a[1:] / k
    E = series_exp(b)
    return float(4.0**h * (-1) ** h * math.factorial(2 * h) * E[2 * h])


def _fraction_series_mul(a: list[Fraction], b: list[Fraction], K: int) -> list[Fraction]:
    out = [Fraction(0)] * (K + 1)
    for i, ai in enumerate(a[: K + 1]):
        if ai == 0:
            continue
        for j in range(0, K + 1 - i):
            out[i + j] += ai * b[j]
    return out


def _fraction_series_inv(a: list[Fraction], K: int) -> list[Fraction]:
    if a[0] == 0:
        raise ZeroDivisionError("series with zero constant term is not invertible")
    inv = [Fraction(0)] * (K + 1)
    inv[0] = 1 / a[0]
    for n in range(1, K + 1):
        acc = sum((a[k] * inv[n - k] for k in range(1, n + 1)), Fraction(0))
        inv[n] = -acc / a[0]
    return inv


def _series_det(M: list[list[list[Fraction]]], K: int) -> list[Fraction]:
    """Determinant of a matrix of power series by Gaussian elimination over the series ring."""
    n = len(M)
    A = [[list(e) for e in row] for row in M]
    det = [Fraction(1)] + [Fraction(0)] * K
    sign = 1
    for col in range(n):
        piv = next((r for r in range(col, n) if A[r][col][0] != 0), None)
        if piv is None:
            raise ConvergenceError("no invertible pivot; determinant series degenerate at t = 0")
        if piv != col:
            A[col], A[piv] = A[piv], A[col]
            sign = -sign
        inv = _fraction_series_inv(A[col][col], K)
        det = _fraction_series_mul(det, A[col][col], K)
        for r in range(col + 1, n):
            factor = _fraction_series_mul(A[r][col], inv, K)
            for c in range(col, n):
                prod = _fraction_series_mul(factor, A[col][c], K)
                A[r][c] = [x - y for x, y in zip(A[r][c], prod)]
    return [sign * d for d in det]


def _half_power_total(s: int) -> Fraction:
    # entry (i, j) carries t^((i+j-1)/2); every permutation must carry the same total
    e = [[Fraction(i + j - 1, 2) for j in range(1, s + 1)] for i in range(1, s + 1)]
    total = sum(e[i][i] for i in range(s))
    for i in range(s):
        for k in range(s):
            for j in range(s):
                for l in range(s):
                    if e[i][j] + e[k][l] != e[i][l] + e[k][j]:
                        raise ConvergenceError("half powers differ between permutations")
    return total


def bessel_det_gf(s: int, K: int = 20) -> PowerSeries:
    """Taylor series of ``e^{-t/2} t^{-s^2/2} det(I_{i+j-1}(2 sqrt t))_{i,j<=s}``.

    Exact in rational arithmetic; ``exact`` carries the Fractions.
    """
    if int(s) != s or not 1 <= s <= MAX_DET_ORDER:
        raise DomainError(f"determinant route needs integer 1 <= s <= {MAX_DET_ORDER}")
    if not 0 <= K <= MAX_TRUNCATION:
        raise DomainError(f"truncation must lie in [0, {MAX_TRUNCATION}]")
    s = int(s)
    if _half_power_total(s) != Fraction(s * s, 2):
        raise ConvergenceError("half powers do not cancel the t^(-s^2/2) prefactor")
    reduced = {n: bessel_i_sqrt_series(n, K) for n in range(1, 2 * s)}
    M = [[reduced[i + j - 1] for j in range(1, s + 1)] for i in range(1, s + 1)]
    det = _series_det(M, K)
    decay = [Fraction((-1) ** k, 2**k * math.factorial(k)) for k in range(K + 1)]
    f = _fraction_series_mul(det, decay, K)
    return PowerSeries(np.array([float(c) for c in f]), exact=f)


def _barnes_g_int(n: int) -> int:
    return math.prod(math.factorial(k) for k in range(1, n - 1))


def moments_from_besseldet_exact(s: int, h: int, K: int | None = None) -> Fraction:
    """Exact rational E[X(s)^(2h)] from the Bessel determinant."""
    if int(s) != s or s < 1:
        raise DomainError("determinant route needs a positive integer s")
    if h < 0 or int(h) != h:
        raise DomainError("h must be a nonnegative integer")
    if h > s:
        raise DomainError(f"determinant formula requires h <= s (h={h}, s={s})")
    s, h = int(s), int(h)
    gf = bessel_det_gf(s, max(2 * h, K or 0))
    g_ratio = Fraction(_barnes_g_int(2 * s + 1), _barnes_g_int(s + 1) ** 2)
    sign = (-1) ** (s * (s - 1) // 2 + h)
    return sign * 4**h * g_ratio * math.factorial(2 * h) * gf.exact[2 * h]


def moments_from_besseldet(s: int, h: int) -> float:
    """E[X(s)^(2h)] = (-1)^(s(s-1)/2+h) 2^(2h) G(2s+1)/G(s+1)^2 (2h)! [t^(2h)] f."""
    return float(moments_from_besseldet_exact(s, h))


def painleve_moment(s: float, h: int, K: int = 20) -> MomentEstimate:
    """E[X(s)^(2h)] from the sigma series; a log resonance falls back to the order-2h truncation."""
    K = max(K, 2 * h)
    try:
        series = sigma_piii_series(s, K)
    except BranchError:
        if 2 * h >= 2 * s + 1:
            raise
        K = max(2, 2 * h)
        series = sigma_piii_series(s, K)
    value = moments_from_tau(s, series, h)
    return MomentEstimate(value, 4 * abs(value) * np.finfo(float).eps, Method.PAINLEVE,
                          {"s": s, "h": h, "K": K})


def bessel_det_moment(s: int, h: int) -> MomentEstimate:
    exact = moments_from_besseldet_exact(s, h)
    return MomentEstimate(float(exact), 0.0, Method.BESSEL_DET,
                          {"s": s, "h": h, "rational": str(exact)})


@dataclass
class SigmaTable:
    """Xi(t) on a grid together with the defect of the quadratic relation."""

    t: np.ndarray
    xi: np.ndarray
    dxi: np.ndarray
    residual: np.ndarray
    breakdown_t: float | None = None
    message: str = ""

    def rows(self):
        return zip(self.t, self.xi, self.residual)


def sigma_defect(s: float, t, tau, d1, d2):
    """LHS - RHS of the sigma equation."""
    return (t * d2) ** 2 - (-4.0 * t * d1**3 + (4.0 * s * s + 4.0 * tau) * d1**2 + t * d1 - tau)


def integrate_sigma(
    s: float,
    series: PowerSeries,
    t_start: float,
    t_end: float,
    tol: float = 1e-10,
    n_out: int = 201,
) -> SigmaTable:
    """Continue the series solution from ``t_start`` to ``t_end``.

    The equation is quadratic in tau''.  Differentiating it once gives
    ``tau'' * (2 t (tau'' + t tau''') - (t - 12 t tau'^2 + 8 (s^2 + tau) tau')) = 0``;
    the root continuous with the series is the second factor, so tau'' is
    carried as a state variable and the quadratic relation is kept as a
    monitored constraint.  A defect or negative discriminant well above
    tolerance is reported as a branch failure with its location.
    """
    if not 0 < t_start < t_end:
        raise DomainError("need 0 < t_start < t_end")
    if series.truncation_error(t_start) > tol:
        raise DomainError(
            f"series truncation {series.truncation_error(t_start):.2e} exceeds tol at t_start; "
            "use a smaller t_start or a longer series"
        )
    y0 = [series(t_start), series(t_start, 1), series(t_start, 2)]

    def rhs(t, y):
        tau, d1, d2 = y
        d3 = (t - 12.0 * t * d1 * d1 + 8.0 * (s * s + tau) * d1 - 2.0 * t * d2) / (2.0 * t * t)
        return [d1, d2, d3]

    sol = solve_ivp(rhs, (t_start, t_end), y0, method="DOP853", rtol=tol, atol=tol * 1e-2,
                    dense_output=True)
    t_series = np.linspace(0.0, t_start, 8, endpoint=False)
    t_reached = sol.t[-1]
    t_ode = np.linspace(t_start, t_reached, n_out)
    Y = sol.sol(t_ode)
    t_all = np.concatenate([t_series, t_ode])
    tau = np.concatenate([series(t_series), Y[0]])
    d1 = np.concatenate([series(t_series, 1), Y[1]])
    d2 = np.concatenate([series(t_series, 2), Y[2]])
    defect = sigma_defect(s, t_all, tau, d1, d2)
    scale = np.maximum.reduce([np.abs(t_all * d2) ** 2, np.abs(tau), np.abs(t_all * d1),
                               np.full_like(t_all, 1e-300)])
    rel = np.abs(defect) / scale
    breakdown, message = None, ""
    if not sol.success:
        breakdown, message = float(t_reached), f"integrator stopped: {sol.message}"
    bad = np.flatnonzero((rel > 1e4 * max(tol, 1e-12)) & (t_all > 0))
    if bad.size:
        t_bad = float(t_all[bad[0]])
        raise BranchError(f"quadratic relation lost at t = {t_bad:.6g} (defect {rel[bad[0]]:.2e})")
    return SigmaTable(t_all, tau, d1, np.abs(defect), breakdown, message)


def finite_N_defect(s: float, N: int, t, xi, d1, d2, limit_form: bool = False):
    """Both sides of the finite-N equation and the per-point relative residual."""
    inv = 0.0 if limit_form else 1.0 / N
    lhs = (t * d2) ** 2
    terms = [
        -4.0 * t * d1**3,
        (4.0 * s * s + 4.0 * xi + inv * inv * t * t) * d1**2,
        t * (1.0 + 2.0 * inv * s - 2.0 * inv * inv * xi) * d1,
        -(1.0 + 2.0 * inv * s - inv * inv * xi) * xi,
    ]
    rhs = sum(terms)
    scale = np.max(np.abs(np.vstack([lhs] + terms)), axis=0)
    return lhs, rhs, np.abs(lhs - rhs) / scale


def finite_N_residual(
    s: int,
    N: int,
    t_grid: Sequence[float],
    order: int = 64,
    dt: float = 1e-3,
    limit_form: bool = False,
    tol: float = 1e-3,
) -> MomentEstimate:
    """Max relative residual of the finite-N sigma equation for Xi_N from quadrature.

    Residuals are normalised per point by the largest term of the equation.
    The computation is repeated at ``dt/2``; if the residual exceeds ``tol``
    and drops sharply under halving, the difference grid is too coarse.
    """
    from .quadrature import xi_N_derivatives

    if int(s) != s or s < 1:
        raise DomainError("the finite-N equation is derived for positive integer s")
    t = np.asarray(t_grid, dtype=float)
    if np.any(t <= 0):
        raise DomainError("t = 0 is excluded: both sides vanish there")
    res = []
    for step in (dt, dt / 2):
        xi, d1, d2 = xi_N_derivatives(s, N, t, order, step)
        res.append(float(np.max(finite_N_defect(s, N, t, xi, d1, d2, limit_form)[2])))
    if not limit_form and res[0] > tol and res[1] < res[0] / 4:
        raise ConvergenceError(
            f"residual {res[0]:.2e} is dominated by the difference step; refine dt"
        )
    return MomentEstimate(res[0], abs(res[0] - res[1]), Method.PAINLEVE,
                          {"s": s, "N": N, "dt": dt, "order": order, "limit_form": limit_form,
                           "residual_half_step": res[1]})
