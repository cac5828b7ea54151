"""Tensor-product quadrature for Hua-Pickrell expectations at small N.

Substituting ``x_j = tan(theta_j)`` turns the heavy-tailed density into

    prod_{i<j} sin^2(theta_i - theta_j) * prod_j cos(theta_j)^(2s)

on the cube ``(-pi/2, pi/2)^N``.  When the observable grows like
``|x_1 + ... + x_N|^p`` the endpoint behaviour is ``cos^(2s-p)``; that power
is carried by a Gauss-Jacobi weight so the remaining integrand stays bounded.
A ``|sum|^b`` cusp is handled by splitting the last coordinate at the point
where the sum vanishes and putting the cusp power into the panel weights.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special

from .errors import ConvergenceError, DivergenceError, DomainError, Method, MomentEstimate
from .exact import (
    check_joint_range,
    even_moment_X,
    even_moment_X_error,
    in_proven_range,
    log_c_N,
    log_F_N_s0,
)

HALF_PI = 0.5 * math.pi
MAX_N = 4
FD_STEP = 1e-3
# order-4 central stencils
_D1 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_D2 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
_CHUNK = 400_000


@dataclass(frozen=True)
class QuadratureGrid:
    """One-dimensional Gauss-Jacobi rule on (-pi/2, pi/2).

    The weights integrate against ``((pi/2)^2 - theta^2)^alpha``;
    ``alpha = 0`` is plain Gauss-Legendre.
    """

    nodes: np.ndarray
    weights: np.ndarray
    order: int
    alpha: float = 0.0

    def jacobi_weight(self, theta):
        return (HALF_PI * HALF_PI - theta * theta) ** self.alpha


@lru_cache(maxsize=64)
def _reference_rule(order: int, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    # weight (1-u)^a (1+u)^b on [-1, 1]
    if a == 0.0 and b == 0.0:
        u, w = np.polynomial.legendre.leggauss(order)
    else:
        u, w = special.roots_jacobi(order, a, b)
    return u, w


def theta_grid(order: int, alpha: float = 0.0) -> QuadratureGrid:
    """Symmetric rule on (-pi/2, pi/2) for the weight ``((pi/2)^2 - theta^2)^alpha``."""
    if order < 2:
        raise DomainError("quadrature order must be at least 2")
    if not alpha > -1.0:
        raise DivergenceError(f"Jacobi exponent {alpha} <= -1: integrand not integrable")
    u, w = _reference_rule(order, alpha, alpha)
    # (pi/2 - theta)(pi/2 + theta) = (pi/2)^2 (1-u)(1+u)
    scale = HALF_PI ** (2.0 * alpha + 1.0)
    return QuadratureGrid(HALF_PI * u, w * scale, order, alpha)


def _panel(order: int, lo: np.ndarray, hi: np.ndarray, a_lo: float, a_hi: float):
    """Nodes/weights on [lo, hi] for the weight (theta-lo)^a_lo (hi-theta)^a_hi.

    ``lo`` and ``hi`` are arrays (one panel per outer node); returned arrays
    have shape ``lo.shape + (order,)``.
    """
    u, w = _reference_rule(order, a_hi, a_lo)
    half = 0.5 * (hi - lo)[..., None]
    theta = lo[..., None] + half * (u + 1.0)
    weights = w * half ** (a_lo + a_hi + 1.0)
    return theta, weights


class HPRule:
    """Nodes of the N-fold rule, reduced to (sum of x, weight) pairs.

    ``E_N^(s)[g(x_1 + ... + x_N)] ~= sum(weights * g(sums))`` with the
    normalisation ``1/(N! c_N^(s))`` already folded into the weights.
    """

    def __init__(self, s: float, N: int, order: int, tail_power: float = 0.0,
                 cusp_power: float | None = None):
        if not s > -0.5:
            raise DomainError(f"s must exceed -1/2, got {s}")
        if int(N) != N or not 1 <= N <= MAX_N:
            raise DomainError(f"quadrature handles 1 <= N <= {MAX_N}; use the ensemble module")
        if cusp_power is not None and not cusp_power > -1.0:
            raise DivergenceError(f"cusp power {cusp_power} <= -1 is not integrable")
        self.s, self.N, self.order = float(s), int(N), int(order)
        self.tail_power = float(tail_power)
        self.cusp_power = cusp_power
        self.alpha = 2.0 * self.s - self.tail_power
        if not self.alpha > -1.0:
            raise DivergenceError(
                f"observable growth |sum|^{tail_power} is not integrable at s={s}"
            )
        self.log_norm = math.lgamma(N + 1) + log_c_N(s, N)
        self.sums, self.weights = self._build()

    def _density_ratio(self, theta: np.ndarray, outer_weight: np.ndarray | None):
        # cos^(2s) / ((pi/2)^2 - theta^2)^alpha, per coordinate, times sin^2 pairs
        cos = np.cos(theta)
        log_ratio = 2.0 * self.s * np.log(cos) - self.alpha * np.log(
            (HALF_PI - theta) * (HALF_PI + theta)
        )
        return np.exp(log_ratio)

    def _build(self):
        N, n, s = self.N, self.order, self.s
        outer = theta_grid(n, self.alpha)
        if self.cusp_power is None:
            inner_dims = N
            grids = [outer.nodes] * N
            mesh = np.meshgrid(*grids, indexing="ij")
            wmesh = np.meshgrid(*([outer.weights] * N), indexing="ij")
            theta = np.stack([m.ravel() for m in mesh], axis=-1)
            w = np.prod(np.stack([m.ravel() for m in wmesh], axis=-1), axis=-1)
            w = w * np.prod(self._density_ratio(theta, None), axis=-1)
            w *= _vandermonde_sq(theta)
            sums = np.tan(theta).sum(axis=-1)
            del inner_dims
            return sums, w * math.exp(-self.log_norm)

        b = float(self.cusp_power)
        if N == 1:
            rest_theta = np.zeros((1, 0))
            rest_w = np.ones(1)
        else:
            mesh = np.meshgrid(*([outer.nodes] * (N - 1)), indexing="ij")
            wmesh = np.meshgrid(*([outer.weights] * (N - 1)), indexing="ij")
            rest_theta = np.stack([m.ravel() for m in mesh], axis=-1)
            rest_w = np.prod(np.stack([m.ravel() for m in wmesh], axis=-1), axis=-1)
            rest_w = rest_w * np.prod(self._density_ratio(rest_theta, None), axis=-1)
        all_sums, all_w = [], []
        for start in range(0, rest_theta.shape[0], max(1, _CHUNK // (2 * n))):
            rt = rest_theta[start:start + max(1, _CHUNK // (2 * n))]
            rw = rest_w[start:start + max(1, _CHUNK // (2 * n))]
            rest_sum = np.tan(rt).sum(axis=-1)
            c = -np.arctan(rest_sum)
            lo = np.full_like(c, -HALF_PI)
            hi = np.full_like(c, HALF_PI)
            tl, wl = _panel(n, lo, c, self.alpha, b)
            tr, wr = _panel(n, c, hi, b, self.alpha)
            t_last = np.concatenate([tl, tr], axis=-1)
            w_last = np.concatenate([wl, wr], axis=-1)
            # remove the Jacobi weights: each panel carries one endpoint factor and the cusp
            endpoint = np.concatenate(
                [(HALF_PI + tl) ** (-self.alpha), (HALF_PI - tr) ** (-self.alpha)], axis=-1
            )
            endpoint *= np.cos(t_last) ** (2.0 * s)
            w_last = w_last * endpoint * np.abs(t_last - c[:, None]) ** (-b)
            k = rt.shape[0]
            theta = np.concatenate(
                [np.repeat(rt[:, None, :], 2 * n, axis=1), t_last[:, :, None]], axis=-1
            )
            w = rw[:, None] * w_last * _vandermonde_sq(theta)
            sums = rest_sum[:, None] + np.tan(t_last)
            all_sums.append(sums.reshape(k * 2 * n))
            all_w.append(w.reshape(k * 2 * n))
        return np.concatenate(all_sums), np.concatenate(all_w) * math.exp(-self.log_norm)

    def expect(self, g: Callable[[np.ndarray], np.ndarray]):
        return np.sum(self.weights * g(self.sums))

    def expect_abs_power(self, p: float) -> float:
        """E|sum|^p, with the cusp weight accounted for."""
        return float(np.sum(self.weights * np.abs(self.sums) ** p))


def _vandermonde_sq(theta: np.ndarray) -> np.ndarray:
    # (tan a - tan b)^2 cos^2 a cos^2 b = sin^2(a - b); cos factors live in the density
    N = theta.shape[-1]
    out = np.ones(theta.shape[:-1])
    for i in range(N):
        for j in range(i + 1, N):
            out = out * np.sin(theta[..., i] - theta[..., j]) ** 2
    return out


def _estimate(values: tuple[float, float], method_meta: dict, rtol: float) -> MomentEstimate:
    coarse, fine = values
    err = abs(fine - coarse)
    scale = max(abs(fine), 1e-300)
    if err > 1e-2 * scale and err > 1e-12:
        raise DivergenceError(
            f"quadrature does not settle under order doubling ({coarse!r} vs {fine!r}); "
            "the expectation is probably infinite"
        )
    meta = dict(method_meta)
    meta["converged"] = bool(err <= max(rtol * scale, 1e-14))
    return MomentEstimate(float(fine), float(err), Method.QUADRATURE, meta)


def _is_even_integer(p: float) -> bool:
    return float(p).is_integer() and int(p) % 2 == 0


def hp_expectation(
    s: float,
    N: int,
    g: Callable[[np.ndarray], np.ndarray],
    order: int = 32,
    *,
    tail_power: float = 0.0,
    cusp_power: float | None = None,
    rtol: float = 1e-8,
) -> MomentEstimate:
    """E_N^(s)[g(x_1 + ... + x_N)] by tensor-product quadrature.

    Args:
        g: vectorised function of the eigenvalue sum.
        order: nodes per axis; the error bar compares ``order`` with ``2*order``.
        tail_power: growth exponent p of ``g`` at infinity (``|g(y)| ~ |y|^p``).
            Matching it keeps convergence spectral for power-like observables.
        cusp_power: if ``g`` behaves like ``|y|^b`` near ``y = 0``, pass ``b``.
        rtol: relative change under doubling below which the result is
            flagged as converged.
    """
    if order < 16:
        raise DomainError("order must be at least 16")
    vals = []
    for n in (order, 2 * order):
        rule = HPRule(s, N, n, tail_power, cusp_power)
        vals.append(float(np.real(rule.expect(g))))
    meta = {"s": s, "N": N, "order": order, "tail_power": tail_power, "cusp_power": cusp_power}
    return _estimate((vals[0], vals[1]), meta, rtol)


def sum_power_expectation(s: float, N: int, p: float, order: int = 32, rtol: float = 1e-8) -> MomentEstimate:
    """E_N^(s)|x_1 + ... + x_N|^p (or the signed power when p is an even integer)."""
    if not p < 2 * s + 1:
        raise DivergenceError(f"E|sum|^{p} is infinite for s={s} (needs p < 2s+1)")
    cusp = None if _is_even_integer(p) else p
    return hp_expectation(
        s, N, lambda y: np.abs(y) ** p, order, tail_power=p, cusp_power=cusp, rtol=rtol
    )


def joint_moment_quadrature(s: float, h: float, N: int, order: int = 32) -> MomentEstimate:
    """F_N(s, h) = F_N(s, 0) 2^(-2h) E_N^(s)|x_1 + ... + x_N|^(2h)."""
    check_joint_range(s, h)
    inner = sum_power_expectation(s, N, 2.0 * h, order)
    factor = math.exp(log_F_N_s0(s, N)) * 2.0 ** (-2.0 * h)
    meta = dict(inner.metadata)
    meta.update(h=h, E_abs_sum_power=inner.value, proven_range=in_proven_range(h))
    return MomentEstimate(factor * inner.value, factor * inner.abs_error, Method.QUADRATURE, meta)


def _char_values(rule: HPRule, t: np.ndarray) -> np.ndarray:
    tau = np.asarray(t, dtype=float) / (2.0 * rule.N)
    out = np.empty(tau.shape, dtype=complex)
    y, w = rule.sums, rule.weights
    for idx, tv in np.ndenumerate(tau):
        phase = tv * y
        out[idx] = complex(np.dot(w, np.cos(phase)), np.dot(w, np.sin(phase)))
    return out


def char_function_N(s: float, N: int, t, order: int = 64):
    """E_N^(s)[exp(i (t/2) (x_1 + ... + x_N) / N)] for scalar or array t."""
    rule = HPRule(s, N, order)
    t_arr = np.asarray(t, dtype=float)
    out = _char_values(rule, t_arr)
    return complex(out) if out.ndim == 0 else out


def _xi_from_phi(rule: HPRule, t: np.ndarray, dt: float) -> np.ndarray:
    offsets = np.arange(-2, 3) * dt
    phi = _char_values(rule, t[:, None] + offsets[None, :]).real
    centre = phi[:, 2]
    if np.any(np.abs(centre) < 1e-8):
        bad = t[np.abs(centre) < 1e-8]
        raise ConvergenceError(f"characteristic function vanishes near t = {bad[0]!r}")
    dphi = phi @ _D1 / dt
    return t * dphi / centre


def xi_N(s: float, N: int, t_grid: Sequence[float], order: int = 64, dt: float = FD_STEP) -> np.ndarray:
    """Xi_N(t) = t d/dt log E_N^(s)[exp(i t sum/(2N))] on ``t_grid``.

    The log-derivative uses order-4 central differences with spacing ``dt``.
    """
    rule = HPRule(s, N, order)
    return _xi_from_phi(rule, np.asarray(t_grid, dtype=float), dt)


def xi_N_derivatives(s: float, N: int, t_grid: Sequence[float], order: int = 64,
                     dt: float = FD_STEP) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(Xi_N, Xi_N', Xi_N'') on ``t_grid`` by nested order-4 differences."""
    rule = HPRule(s, N, order)
    t = np.asarray(t_grid, dtype=float)
    offsets = np.arange(-2, 3) * dt
    xi = _xi_from_phi(rule, (t[:, None] + offsets[None, :]).ravel(), dt).reshape(t.size, 5)
    return xi[:, 2], xi @ _D1 / dt, xi @ _D2 / dt**2


def even_moment_X_quadrature(s: float, h: int, order: int = 16) -> MomentEstimate:
    """E[X(s)^(2h)] assembled from E_k[(x_1+...+x_k)^(2h)], k = 1..2h, each by quadrature."""
    if int(h) != h or not 1 <= 2 * h <= MAX_N:
        raise DomainError(f"quadrature assembly needs 2h <= {MAX_N}, got h={h}")
    h = int(h)
    ests = {k: hp_expectation(s, k, lambda y: y ** (2 * h), order, tail_power=2.0 * h)
            for k in range(1, 2 * h + 1)}
    value = even_moment_X(s, h, {k: e.value for k, e in ests.items()})
    err = even_moment_X_error(h, {k: e.abs_error for k, e in ests.items()})
    # rounding floor from the alternating binomial sum
    floor = 64 * np.finfo(float).eps * even_moment_X_error(h, {k: abs(e.value) for k, e in ests.items()})
    return MomentEstimate(value, max(err, floor), Method.QUADRATURE,
                          {"s": s, "h": h, "order": order, "E_k": {k: e.value for k, e in ests.items()}})
