"""The limiting Bessel-type kernel K^(s) on the punctured line.

With ``A = 2^(2s-1/2) Gamma(s+1/2)`` and ``B = 2^(2s+1/2) Gamma(s+3/2)``,

    P(x) = A |x|^(-1/2) J_{s-1/2}(1/|x|),
    Q(x) = sgn(x) B |x|^(-1/2) J_{s+1/2}(1/|x|),
    K(x, y) = C (P(x) Q(y) - P(y) Q(x)) / (x - y),

where ``C = Gamma(s+1)^2 / (2 pi Gamma(2s+1) Gamma(2s+2))``.  Points of the
process accumulate at the origin: in ``u = 1/|x|`` they look like a sine
process of density 1/pi, so every discretisation here is laid out in ``u``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import ConvergenceError, DivergenceError, DomainError, Method, MomentEstimate
from .specfun import bessel_j

NEAR_DIAGONAL = 1e-6
# K^(s) as normalised above has spectrum in [0, 1/2]; twice it is the projection
# whose correlation functions reproduce E[X(s)^2] = 1/(4s^2 - 1)
CORRELATION_FACTOR = 2.0
EPS_LADDER = (1e-2, 5e-3, 2.5e-3)
_TAIL_Z = 2000.0


def _check_s(s: float) -> None:
    if not s > -0.5:
        raise DomainError(f"kernel needs s > -1/2, got {s}")


def kernel_constant(s: float) -> float:
    """C = Gamma(s+1)^2 / (2 pi Gamma(2s+1) Gamma(2s+2))."""
    return math.exp(2 * math.lgamma(s + 1) - math.lgamma(2 * s + 1) - math.lgamma(2 * s + 2)) / (
        2 * math.pi
    )


def diagonal_constant(s: float) -> float:
    """const^(s) of the three-term diagonal formula (equals C * A * B)."""
    return math.exp(
        (4 * s - 1) * math.log(2)
        + 2 * math.lgamma(s + 1)
        + math.lgamma(s + 0.5)
        + math.lgamma(s + 1.5)
        - math.lgamma(2 * s + 1)
        - math.lgamma(2 * s + 2)
    ) / math.pi


def _amplitudes(s: float) -> tuple[float, float]:
    A = 2.0 ** (2 * s - 0.5) * math.gamma(s + 0.5)
    B = 2.0 ** (2 * s + 0.5) * math.gamma(s + 1.5)
    return A, B


def _nonzero(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if np.any(x == 0) or not np.all(np.isfinite(x)):
        raise DomainError("kernel is defined on nonzero finite reals only")
    return x


def p_function(s: float, x):
    _check_s(s)
    x = _nonzero(x)
    A, _ = _amplitudes(s)
    ax = np.abs(x)
    return A * ax**-0.5 * bessel_j(s - 0.5, 1.0 / ax)


def q_function(s: float, x):
    _check_s(s)
    x = _nonzero(x)
    _, B = _amplitudes(s)
    ax = np.abs(x)
    return np.sign(x) * B * ax**-0.5 * bessel_j(s + 0.5, 1.0 / ax)


def _pq_derivatives(s: float, x: np.ndarray):
    """P, P', Q, Q' from d/dx [x^(-1/2) J_nu(1/x)] = -x^(-3/2)/2 J - x^(-5/2) J'."""
    A, B = _amplitudes(s)
    ax = np.abs(x)
    z = 1.0 / ax
    sg = np.sign(x)
    out = []
    for nu, amp in ((s - 0.5, A), (s + 0.5, B)):
        J = special.jv(nu, z)
        dJ = special.jvp(nu, z)
        f = amp * ax**-0.5 * J
        df = amp * (-0.5 * ax**-1.5 * J - ax**-2.5 * dJ)
        out.append((f, df))
    (P, dP_abs), (Qa, dQ_abs) = out
    # P even, Q = sgn * Qa odd: P'(x) = sgn dP_abs, Q'(x) = dQ_abs
    return P, sg * dP_abs, sg * Qa, dQ_abs


def _diagonal_by_derivatives(s: float, x: np.ndarray) -> np.ndarray:
    P, dP, Q, dQ = _pq_derivatives(s, x)
    return kernel_constant(s) * (dP * Q - P * dQ)


def kernel_diagonal(s: float, x):
    """K^(s)(x, x) from the three-term Bessel formula, extended evenly to x < 0."""
    _check_s(s)
    x = _nonzero(x)
    ax = np.abs(x)
    z = 1.0 / ax
    jp = bessel_j(s + 0.5, z)
    jm = bessel_j(s - 0.5, z)
    out = diagonal_constant(s) * (z**3 * (jp * jp + jm * jm) - 2 * s * z * z * jp * jm)
    return float(out) if np.ndim(out) == 0 else out


def kernel_matrix(s: float, x, y=None) -> np.ndarray:
    """K^(s)(x_i, y_j) for all pairs; coincident or nearly coincident pairs use the diagonal limit."""
    _check_s(s)
    x = np.atleast_1d(_nonzero(x))
    y = x if y is None else np.atleast_1d(_nonzero(y))
    C = kernel_constant(s)
    Px, Qx = p_function(s, x), q_function(s, x)
    Py, Qy = (Px, Qx) if y is x else (p_function(s, y), q_function(s, y))
    diff = x[:, None] - y[None, :]
    scale = np.maximum(np.abs(x)[:, None], np.abs(y)[None, :])
    near = (np.abs(diff) < NEAR_DIAGONAL * scale) & (np.sign(x)[:, None] == np.sign(y)[None, :])
    with np.errstate(divide="ignore", invalid="ignore"):
        K = C * (Px[:, None] * Qy[None, :] - Py[None, :] * Qx[:, None]) / diff
    if np.any(near):
        i, j = np.nonzero(near)
        # K(m+d, m-d) is even in d, so the midpoint diagonal is accurate to O(d^2)
        K[i, j] = _diagonal_by_derivatives(s, 0.5 * (x[i] + y[j]))
    return K


def kernel_eval(s: float, x: float, y: float) -> float:
    """K^(s)(x, y) for nonzero x, y."""
    return float(kernel_matrix(s, [x], [y])[0, 0])


def correlation_matrix(s: float, x, y=None) -> np.ndarray:
    """Correlation kernel of the limiting point process, ``CORRELATION_FACTOR * K^(s)``."""
    return CORRELATION_FACTOR * kernel_matrix(s, x, y)


# --- quadrature in u = 1/|x| -------------------------------------------------------


def _gl_panels(edges: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    u, w = np.polynomial.legendre.leggauss(n)
    a, b = edges[:-1, None], edges[1:, None]
    nodes = 0.5 * (b - a) * u + 0.5 * (b + a)
    weights = 0.5 * (b - a) * w
    return nodes.ravel(), weights.ravel()


def _panel_edges(u_lo: float, u_hi: float, panel_len: float) -> np.ndarray:
    # geometric panels below u = 1 (large |x|), uniform panels above
    edges = []
    if u_lo < 1.0:
        edges = list(np.geomspace(u_lo, min(1.0, u_hi), max(2, int(np.ceil(np.log2(1.0 / u_lo))) + 1)))
    if u_hi > 1.0:
        start = max(1.0, u_lo)
        n = max(1, int(np.ceil((u_hi - start) / panel_len)))
        uniform = list(np.linspace(start, u_hi, n + 1))
        edges = edges[:-1] + uniform if edges else uniform
    return np.array(edges)


def positive_half_rule(eps: float, R: float, nodes_per_panel: int = 12, panel_len: float = 2.0):
    """Nodes and dx-weights on [eps, R] built from Gauss-Legendre panels in u = 1/x."""
    if not 0 < eps < R:
        raise DomainError("need 0 < eps < R")
    u, wu = _gl_panels(_panel_edges(1.0 / R, 1.0 / eps, panel_len), nodes_per_panel)
    x = 1.0 / u
    order = np.argsort(x)
    return x[order], (wu / u**2)[order]


@dataclass
class NystromOperator:
    """Discretised correlation kernel 2 K^(s) on [-R, -eps] U [eps, R], mirror-symmetric nodes."""

    s: float
    nodes: np.ndarray
    weights: np.ndarray
    matrix: np.ndarray
    domain: tuple[float, float]
    metadata: dict = field(default_factory=dict)

    @classmethod
    def build(cls, s: float, eps: float, R: float, nodes_per_panel: int = 12,
              panel_len: float = 2.0) -> "NystromOperator":
        _check_s(s)
        xp, wp = positive_half_rule(eps, R, nodes_per_panel, panel_len)
        nodes = np.concatenate([-xp[::-1], xp])
        weights = np.concatenate([wp[::-1], wp])
        return cls(s, nodes, weights, correlation_matrix(s, nodes), (eps, R),
                   {"nodes_per_panel": nodes_per_panel, "panel_len": panel_len})

    def symmetric_matrix(self) -> np.ndarray:
        r = np.sqrt(self.weights)
        return r[:, None] * self.matrix * r[None, :]

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.symmetric_matrix())

    def fredholm_det(self, g: np.ndarray) -> complex:
        """det(I + W^(1/2) G K W^(1/2)) via LU."""
        M = self.symmetric_matrix() * np.asarray(g)[:, None]
        M = M.astype(complex)
        M[np.diag_indices_from(M)] += 1.0
        sign, logdet = np.linalg.slogdet(M)
        return complex(sign * np.exp(logdet))


def _jacobi_rule(n: int, b: float, p: float):
    # nodes/weights on [0, b] for the weight z^p
    u, w = special.roots_jacobi(n, 0.0, p)
    z = 0.5 * b * (u + 1.0)
    return z, w * (0.5 * b) ** (p + 1.0)


def _tail_integral(s: float, h: float, b: float, n: int) -> float:
    """int_0^b [z^(1-2h)(Jp^2+Jm^2) - 2s z^(-2h) Jp Jm] dz, singular weight z^(2s-2h) factored out."""
    p = 2 * s - 2 * h
    pieces = [0.0]
    first = min(b, 2.0)
    if b > first:
        pieces = list(np.arange(first, b, 2.0)) + [b]
        pieces = [0.0] + pieces
    else:
        pieces = [0.0, b]
    total = 0.0
    z, w = _jacobi_rule(n, pieces[1], p)
    total += np.dot(w, _tail_integrand(s, h, z) / z**p)
    if len(pieces) > 2:
        zz, ww = _gl_panels(np.array(pieces[1:]), n)
        total += np.dot(ww, _tail_integrand(s, h, zz))
    return float(total)


def _tail_integrand(s: float, h: float, z):
    jp = special.jv(s + 0.5, z)
    jm = special.jv(s - 0.5, z)
    return z ** (1 - 2 * h) * (jp * jp + jm * jm) - 2 * s * z ** (-2 * h) * jp * jm


def _bulk_integral(s: float, a: float, n: int, panel_len: float = 2.0) -> float:
    """int_a^inf [z^(-1)(Jp^2+Jm^2) - 2s z^(-2) Jp Jm] dz; beyond Z the integrand is 2/(pi z^2) + O(z^-4)."""
    Z = max(_TAIL_Z, 4 * a)
    edges = _panel_edges(a, Z, panel_len) if a < 1 else np.linspace(a, Z, int(np.ceil((Z - a) / panel_len)) + 1)
    z, w = _gl_panels(edges, n)
    jp = special.jv(s + 0.5, z)
    jm = special.jv(s - 0.5, z)
    f = (jp * jp + jm * jm) / z - 2 * s * jp * jm / (z * z)
    return float(np.dot(w, f) + 2.0 / (math.pi * Z))


def moment_integrals(s: float, h: float, R: float, n: int = 24) -> tuple[float, float]:
    """(int_{|x|>=R} x^(2h) K(x,x) dx, int_{|x|<R} x^2 K(x,x) dx) over both half-lines."""
    _check_s(s)
    if not R > 0:
        raise DomainError("R must be positive")
    if not h < s + 0.5:
        raise DivergenceError(
            f"int x^(2h) K(x,x) diverges at infinity for h >= s + 1/2 (s={s}, h={h})"
        )
    c = 2.0 * diagonal_constant(s)
    return c * _tail_integral(s, h, 1.0 / R, n), c * _bulk_integral(s, 1.0 / R, n)


def moment_integrals_checked(s: float, h: float, R: float, n: int = 24, rtol: float = 1e-6):
    """moment_integrals with a panel-doubling self-convergence check."""
    coarse = moment_integrals(s, h, R, n)
    fine = moment_integrals(s, h, R, 2 * n)
    for a, b in zip(coarse, fine):
        if abs(a - b) > rtol * max(abs(b), 1e-300):
            raise ConvergenceError(f"moment integral unsettled under refinement: {a!r} vs {b!r}")
    return fine


def _variance_pieces(s: float, eps: float, R: float, npp: int, panel_len: float):
    # (single, double, double restricted to |x|,|y| <= R/2) for the correlation kernel
    x, w = positive_half_rule(eps, R, npp, panel_len)
    Kpp = correlation_matrix(s, x)
    Kpm = correlation_matrix(s, x, -x)
    single = 2.0 * np.dot(w, x * x * np.diag(Kpp))
    xw = x * w
    D = Kpp**2 - Kpm**2
    inner = x <= 0.5 * R
    return single, 2.0 * xw @ D @ xw, 2.0 * xw[inner] @ D[np.ix_(inner, inner)] @ xw[inner]


def variance_via_kernel(s: float, R: float = 50.0, n_nodes: int = 10,
                        eps: tuple[float, float] = (1e-2, 5e-3),
                        panel_len: float = 2.0) -> MomentEstimate:
    """E[X(s)^2] = int x^2 rho(x,x) dx - iint x y rho(x,y)^2 dx dy, rho = 2 K^(s).

    Both integrals are discretised on [eps, R] (mirror images by parity); the
    single integral beyond R is added from :func:`moment_integrals`.  The two
    ``eps`` values are combined by Richardson extrapolation with an eps^2
    leading error.  The error bar sums the eps correction, node doubling and
    the double-integral tail beyond R, estimated from the (R/2, R] shell.
    """
    _check_s(s)
    if not s > 0.5:
        raise DomainError("E[X(s)^2] is finite only for s > 1/2")
    e1, e2 = eps
    tail = CORRELATION_FACTOR * moment_integrals(s, 1.0, R)[0]
    single1, double1, _ = _variance_pieces(s, e1, R, n_nodes, panel_len)
    single2, double2, double2_half = _variance_pieces(s, e2, R, n_nodes, panel_len)
    single2f, double2f, _ = _variance_pieces(s, e2, R, 2 * n_nodes, panel_len)
    v1 = single1 - double1 + tail
    v2 = single2 - double2 + tail
    v2f = single2f - double2f + tail
    ratio = (e1 / e2) ** 2
    value = (ratio * v2f - v1) / (ratio - 1.0)
    shell = abs(double2 - double2_half)
    shell_tail = shell / (2.0 ** (2 * s) - 1.0)
    err = abs(value - v2f) + abs(v2f - v2) + shell_tail
    return MomentEstimate(float(value), float(err), Method.KERNEL,
                          {"s": s, "R": R, "eps": list(eps), "n_nodes": n_nodes,
                           "tail": tail, "raw": [v1, v2f]})


def g_multiplier(t: float, x: np.ndarray) -> np.ndarray:
    return np.expm1(0.5j * t * x)


def fredholm_char_function(
    s: float,
    t: float,
    eps: float | None = None,
    R: float = 200.0,
    n_nodes: int = 10,
    panel_len: float = 2.0,
) -> MomentEstimate:
    """E[exp(i t X(s)/2)] as a Fredholm determinant on [-R,-eps] U [eps,R].

    With ``eps`` given, one determinant is returned.  Otherwise the values at
    eps in (1e-2, 5e-3, 2.5e-3) are combined by Richardson extrapolation
    assuming an eps^2 leading error; the spread between the two extrapolants
    and the raw finest value is reported as the error.  The value is complex;
    ``metadata['imag']`` holds the imaginary part.
    """
    _check_s(s)
    if t == 0:
        return MomentEstimate(1.0, 0.0, Method.KERNEL, {"s": s, "t": 0.0, "imag": 0.0})
    ladder = (eps,) if eps is not None else EPS_LADDER
    vals = []
    for e in ladder:
        op = NystromOperator.build(s, e, R, n_nodes, panel_len)
        vals.append(op.fredholm_det(g_multiplier(t, op.nodes)))
    if eps is not None:
        v = vals[0]
        spread = 0.0
    else:
        r1 = (4 * vals[1] - vals[0]) / 3
        r2 = (4 * vals[2] - vals[1]) / 3
        v = r2
        spread = abs(r2 - r1)
    meta = {"s": s, "t": t, "R": R, "n_nodes": n_nodes, "eps": list(ladder),
            "raw": [complex(c).real for c in vals], "imag": float(np.imag(v))}
    return MomentEstimate(float(np.real(v)), float(spread), Method.KERNEL, meta)


def fredholm_scan(s: float, t_values, **kw) -> list[tuple[float, float, float, float]]:
    """Rows (t, Re phi, Im phi, spread) for CSV output."""
    rows = []
    for t in t_values:
        est = fredholm_char_function(s, float(t), **kw)
        rows.append((float(t), est.value, est.metadata["imag"], est.abs_error))
    return rows
