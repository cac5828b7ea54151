"""Monte Carlo routes: Hua-Pickrell Metropolis chains and Haar-unitary sampling.

The Hua-Pickrell eigenvalues are sampled in Cayley angles ``x = cot(theta/2)``,
where the density becomes

    prod_{i<j} sin^2((theta_i - theta_j)/2) * prod_j |sin(theta_j/2)|^(2s)

on the circle.  A Gaussian step on the circle is a heavy-tailed proposal in x,
so excursions to large |x| are proposed at the rate the target needs.  Many
chains advance together as rows of one array; a replica block of chains owns
one Philox stream spawned from the master seed.
"""

from __future__ import annotations

import csv
import enum
import math
import warnings
from collections.abc import Iterator, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import DomainError, ExtrapolationError, Method, MomentEstimate
from .exact import check_joint_range, in_proven_range, log_F_N_s0
from .specfun import pearson_iv_cdf

TWO_PI = 2.0 * math.pi
TARGET_ACCEPTANCE = 0.4
HEAVY_TAIL_MARGIN = 0.1


class Origin(str, enum.Enum):
    MCMC = "mcmc"
    CUE_CAYLEY = "cue_cayley"


@dataclass(frozen=True)
class EigenvalueSample:
    points: np.ndarray
    origin: Origin

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if not np.all(np.isfinite(pts)):
            raise DomainError("eigenvalues must be finite")
        if np.any(np.diff(pts) > 0):
            raise DomainError("points must be sorted non-increasing")


@dataclass(frozen=True)
class ThetaSample:
    angles: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.angles, dtype=float)
        if np.any((a < 0) | (a >= TWO_PI)):
            raise DomainError("angles must lie in [0, 2 pi)")


@dataclass(frozen=True)
class ChainConfig:
    """Metropolis settings.

    ``n_samples`` counts retained configurations summed over all chains;
    ``proposal_scale`` is the initial angular step in units of the mean
    spacing 2 pi / N and is tuned during burn-in when ``tune`` is set.
    """

    seed: int = 0
    burn_in: int = 200
    thinning: int = 1
    proposal_scale: float = 1.0
    n_samples: int = 10_000
    n_chains: int = 64
    chains_per_block: int = 64
    tune: bool = True
    workers: int = 1

    def __post_init__(self):
        if not self.proposal_scale > 0:
            raise DomainError("proposal_scale must be positive")
        for name in ("burn_in", "n_samples", "n_chains", "chains_per_block", "workers"):
            if getattr(self, name) < 1:
                raise DomainError(f"{name} must be positive")
        if self.thinning < 1:
            raise DomainError("thinning must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must be a 64-bit unsigned integer")


def block_generators(seed: int, n_blocks: int) -> list[np.random.Generator]:
    children = np.random.SeedSequence(seed).spawn(n_blocks)
    return [np.random.Generator(np.random.Philox(c)) for c in children]


class _ChainBlock:
    """C parallel chains of N angles each.

    With ``tilt > 0`` the target is multiplied by ``(1 + (sum x / L)^2)^(tilt/2)``.
    """

    def __init__(self, s: float, N: int, C: int, scale: float, rng: np.random.Generator,
                 tilt: float = 0.0, tilt_scale: float = 1.0):
        self.s, self.N, self.C, self.rng = s, N, C, rng
        self.tilt, self.tilt_scale = tilt, tilt_scale
        base = TWO_PI * (np.arange(N) + 0.5) / N
        shift = rng.uniform(0.0, TWO_PI, size=(C, 1))
        jitter = rng.normal(0.0, 0.1 * TWO_PI / N, size=(C, N))
        self.theta = np.mod(base + shift + jitter, TWO_PI)
        self.step = scale * TWO_PI / N
        self.accepted = 0
        self.proposed = 0

    def sweep(self):
        N, C = self.N, self.C
        theta = self.theta
        z = self.rng.standard_normal((N, C))
        logu = np.log(self.rng.uniform(size=(N, C)))
        rows = np.arange(C)
        acc = 0
        tilted = self.tilt > 0
        if tilted:
            S = self.sums()
            L = self.tilt_scale
        for k in range(N):
            old = theta[:, k]
            new = np.mod(old + self.step * z[k], TWO_PI)
            s_new = np.abs(np.sin(0.5 * (new[:, None] - theta)))
            s_old = np.abs(np.sin(0.5 * (old[:, None] - theta)))
            s_new[:, k] = 1.0
            s_old[:, k] = 1.0
            delta = 2.0 * np.log(s_new / s_old).sum(axis=1)
            delta += 2.0 * self.s * np.log(np.abs(np.sin(0.5 * new)) / np.abs(np.sin(0.5 * old)))
            if tilted:
                S_new = S + 1.0 / np.tan(0.5 * new) - 1.0 / np.tan(0.5 * old)
                delta += 0.5 * self.tilt * (np.log1p((S_new / L) ** 2) - np.log1p((S / L) ** 2))
            ok = logu[k] < delta
            theta[rows[ok], k] = new[ok]
            if tilted:
                S = np.where(ok, S_new, S)
            acc += int(ok.sum())
        self.accepted += acc
        self.proposed += N * C
        return acc / (N * C)

    def sums(self) -> np.ndarray:
        return (1.0 / np.tan(0.5 * self.theta)).sum(axis=1)

    def points(self) -> np.ndarray:
        return -np.sort(-1.0 / np.tan(0.5 * self.theta), axis=1)


@dataclass
class ChainRun:
    """Retained sums x_1+...+x_N, laid out as (saved sweep, chain)."""

    s: float
    N: int
    sums: np.ndarray
    acceptance: float
    step: list[float]
    config: ChainConfig
    points: np.ndarray | None = field(default=None, repr=False)
    tilt: float = 0.0
    tilt_scale: float = 1.0

    def chain_means(self, f) -> np.ndarray:
        return f(self.sums).mean(axis=0)

    def estimate(self, f) -> tuple[float, float]:
        """Mean of f(sum) under the untilted law and its standard error from chain means.

        Tilted runs are reweighted by ``w = (1 + (sum/L)^2)^(-tilt/2)`` with the
        self-normalised ratio ``mean(f w) / mean(w)``; the error uses the delta
        method over independent chains.
        """
        if self.tilt == 0:
            m = self.chain_means(f)
            return float(m.mean()), float(m.std(ddof=1) / math.sqrt(m.size))
        w = (1.0 + (self.sums / self.tilt_scale) ** 2) ** (-0.5 * self.tilt)
        fw = (f(self.sums) * w).mean(axis=0)
        wm = w.mean(axis=0)
        r = fw.mean() / wm.mean()
        lin = (fw - r * wm) / wm.mean()
        return float(r), float(lin.std(ddof=1) / math.sqrt(lin.size))


def run_chains(s: float, N: int, cfg: ChainConfig, keep_points: bool = False,
               tilt: float = 0.0, tilt_scale: float = 1.0) -> ChainRun:
    """Advance ``cfg.n_chains`` chains and collect ``cfg.n_samples`` retained states.

    ``tilt`` = p samples the law reweighted by ``(1 + (sum/tilt_scale)^2)^(p/2)``;
    it must satisfy p < 2s + 1 so the tilted law is normalisable.
    """
    if tilt and not 0 < tilt < 2 * s + 1:
        raise DomainError(f"tilt {tilt} makes the law non-normalisable at s={s}")
    if not s > -0.5:
        raise DomainError(f"s must exceed -1/2, got {s}")
    if int(N) != N or N < 1:
        raise DomainError("N must be a positive integer")
    n_blocks = math.ceil(cfg.n_chains / cfg.chains_per_block)
    sizes = [min(cfg.chains_per_block, cfg.n_chains - b * cfg.chains_per_block) for b in range(n_blocks)]
    gens = block_generators(cfg.seed, n_blocks)
    per_chain = math.ceil(cfg.n_samples / cfg.n_chains)

    def advance(size: int, rng: np.random.Generator):
        block = _ChainBlock(s, int(N), size, cfg.proposal_scale, rng, tilt, tilt_scale)
        for i in range(cfg.burn_in):
            rate = block.sweep()
            if cfg.tune and i < 0.8 * cfg.burn_in:
                block.step = min(math.pi, block.step * math.exp(rate - TARGET_ACCEPTANCE))
        block.accepted = block.proposed = 0
        out = np.empty((per_chain, size))
        out_pts = np.empty((per_chain, size, int(N))) if keep_points else None
        for j in range(per_chain):
            for _ in range(cfg.thinning):
                block.sweep()
            out[j] = block.sums()
            if keep_points:
                out_pts[j] = block.points()
        return out, out_pts, block.step, block.accepted, block.proposed

    # each block owns its generator, so the result does not depend on scheduling
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        results = list(pool.map(advance, sizes, gens))
    sums = [r[0] for r in results]
    pts = [r[1] for r in results]
    steps = [r[2] for r in results]
    acc = sum(r[3] for r in results)
    prop = sum(r[4] for r in results)
    return ChainRun(
        s, int(N), np.concatenate(sums, axis=1), acc / prop, steps, cfg,
        np.concatenate(pts, axis=1) if keep_points else None, tilt, tilt_scale,
    )


def mcmc_sample_hp(s: float, N: int, cfg: ChainConfig) -> Iterator[EigenvalueSample]:
    """Stream of Hua-Pickrell eigenvalue configurations (sweep-major, chain-minor order)."""
    run = run_chains(s, N, cfg, keep_points=True)
    count = 0
    for row in run.points:
        for p in row:
            if count >= cfg.n_samples:
                return
            yield EigenvalueSample(p, Origin.MCMC)
            count += 1


def hill_tail_index(values: np.ndarray, k: int | None = None) -> tuple[float, float]:
    """Hill estimate of the tail index of |values| and its standard error."""
    a = np.sort(np.abs(np.asarray(values, dtype=float).ravel()))[::-1]
    a = a[a > 0]
    if k is None:
        k = max(10, int(math.sqrt(a.size)))
    k = min(k, a.size - 1)
    logs = np.log(a[:k]) - math.log(a[k])
    alpha = 1.0 / logs.mean()
    return float(alpha), float(alpha / math.sqrt(k))


def hp_abs_moment(s: float, N: int, p: float, cfg: ChainConfig, scale_by_N: bool = False,
                  tilt: bool = True) -> MomentEstimate:
    """E_N^(s)|x_1+...+x_N|^p from Metropolis chains (optionally of the sum divided by N).

    By default the chains sample the tilted law ``M_N^(s) (1 + (sum/L)^2)^(p/2)``
    (L = N when ``scale_by_N``) and the moment is recovered by self-normalised
    reweighting; both ratio terms are bounded, so the standard error is finite
    for every p < 2s + 1.  Untilted runs withhold the error (inf) when the Hill
    index of the sums indicates that |sum|^p has infinite variance.
    """
    div = float(N) if scale_by_N else 1.0
    use_tilt = tilt and p > 0
    run = run_chains(s, N, cfg, tilt=p if use_tilt else 0.0, tilt_scale=div)
    if p == 0:
        value, se = 1.0, 0.0
    else:
        value, se = run.estimate(lambda y: np.abs(y / div) ** p)
    alpha, alpha_se = hill_tail_index(run.sums)
    meta = {"s": s, "N": N, "p": p, "acceptance": run.acceptance, "tail_index": alpha,
            "tail_index_se": alpha_se, "n_samples": int(run.sums.size), "seed": run.config.seed,
            "tilted": use_tilt}
    if p > 0 and not use_tilt and alpha + 2 * alpha_se < 2 * p:
        warnings.warn(f"tail index {alpha:.2f} implies infinite variance of |sum|^{p}; "
                      "standard error withheld", RuntimeWarning, stacklevel=2)
        se = math.inf
        meta["variance_divergent"] = True
    return MomentEstimate(value, se, Method.MCMC, meta)


def joint_moment_mcmc(s: float, h: float, N: int, cfg: ChainConfig) -> MomentEstimate:
    """F_N(s, 0) 2^(-2h) E_N|sum x|^(2h) with the expectation from Metropolis chains."""
    check_joint_range(s, h)
    inner = hp_abs_moment(s, N, 2.0 * h, cfg)
    factor = math.exp(log_F_N_s0(s, N)) * 2.0 ** (-2.0 * h)
    meta = dict(inner.metadata, h=h, proven_range=in_proven_range(h))
    return MomentEstimate(factor * inner.value, factor * inner.abs_error, Method.MCMC, meta)


# --- Haar unitaries ------------------------------------------------------------------


def haar_unitaries(N: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """n Haar-distributed N x N unitaries: QR of a complex Ginibre matrix with R's diagonal phases removed."""
    Z = (rng.standard_normal((n, N, N)) + 1j * rng.standard_normal((n, N, N))) / math.sqrt(2.0)
    Q, R = np.linalg.qr(Z)
    d = np.diagonal(R, axis1=1, axis2=2)
    return Q * (d / np.abs(d))[:, None, :]


def cue_angles(N: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """(n, N) eigenangles in [0, 2 pi) of Haar unitaries."""
    if int(N) != N or N < 1:
        raise DomainError("N must be a positive integer")
    lam = np.linalg.eigvals(haar_unitaries(int(N), n, rng))
    return np.mod(np.angle(lam), TWO_PI)


def cue_sample(N: int, seed) -> ThetaSample:
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    return ThetaSample(cue_angles(N, 1, rng)[0])


def cayley_points(theta: np.ndarray) -> np.ndarray:
    th = np.where(theta == 0.0, 1e-300, theta)
    return 1.0 / np.tan(0.5 * th)


def cayley_transform(theta: ThetaSample) -> EigenvalueSample:
    """x_j = cot(theta_j / 2), sorted non-increasing."""
    x = cayley_points(np.asarray(theta.angles, dtype=float))
    return EigenvalueSample(-np.sort(-x), Origin.CUE_CAYLEY)


def joint_moment_cue(s: float, h: float, N: int, n_samples: int, seed: int,
                     batch: int = 20_000) -> MomentEstimate:
    """Haar average of |V(0)|^(2s-2h) |V'(0)|^(2h), V'(0) = -V(0) sum_j cot(theta_j/2) / 2."""
    check_joint_range(s, h)
    if int(N) != N or not 1 <= N <= 64:
        raise DomainError("direct CUE route is limited to 1 <= N <= 64")
    meta = {"s": s, "h": h, "N": N, "n_samples": n_samples, "seed": seed,
            "proven_range": in_proven_range(h)}
    if s + 0.5 - h < HEAVY_TAIL_MARGIN:
        warnings.warn("h is close to s + 1/2: the estimator has infinite variance",
                      RuntimeWarning, stacklevel=2)
        meta["heavy_tail"] = True
    if s == 0 and h == 0:
        return MomentEstimate(1.0, 0.0, Method.CUE_DIRECT, meta)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    total = total_sq = 0.0
    done = 0
    while done < n_samples:
        m = min(batch, n_samples - done)
        theta = cue_angles(N, m, rng)
        log_v = np.log(2.0 * np.abs(np.sin(0.5 * theta))).sum(axis=1)
        deriv = 0.5 * np.abs(cayley_points(theta).sum(axis=1))
        with np.errstate(divide="ignore"):
            w = np.exp(2.0 * s * log_v + 2.0 * h * np.log(deriv)) if h != 0 else np.exp(2.0 * s * log_v)
        total += math.fsum(w)
        total_sq += math.fsum(w * w)
        done += m
    mean = total / n_samples
    var = max(total_sq / n_samples - mean * mean, 0.0)
    return MomentEstimate(mean, math.sqrt(var / (n_samples - 1)), Method.CUE_DIRECT, meta)


# --- N -> infinity -------------------------------------------------------------------


def extrapolate_inverse_N(N_grid: Sequence[int], values: Sequence[float], errors: Sequence[float],
                          chi2_pvalue: float = 1e-3) -> tuple[float, float, dict]:
    """Weighted least-squares fit E_N = E_inf + c/N; returns (E_inf, error, fit info).

    The intercept error is inflated by sqrt(chi^2/dof) when the fit is worse
    than its statistics; a fit rejected at ``chi2_pvalue`` raises.
    """
    N = np.asarray(N_grid, dtype=float)
    y = np.asarray(values, dtype=float)
    e = np.asarray(errors, dtype=float)
    if N.size < 2:
        raise DomainError("need at least two N values")
    if np.any(~np.isfinite(e)) or np.any(e <= 0):
        raise ExtrapolationError("every grid point needs a finite positive error")
    A = np.column_stack([np.ones_like(N), 1.0 / N])
    W = 1.0 / e**2
    cov = np.linalg.inv(A.T @ (A * W[:, None]))
    beta = cov @ (A.T @ (W * y))
    resid = (y - A @ beta) / e
    dof = N.size - 2
    chi2 = float(resid @ resid)
    info = {"slope": float(beta[1]), "chi2": chi2, "dof": dof, "residuals": resid.tolist()}
    err = math.sqrt(cov[0, 0])
    if dof > 0:
        p = float(stats.chi2.sf(chi2, dof))
        info["pvalue"] = p
        if p < chi2_pvalue:
            raise ExtrapolationError(
                f"1/N fit rejected: chi^2 = {chi2:.1f} on {dof} dof (p = {p:.1e})"
            )
        err *= max(1.0, math.sqrt(chi2 / dof))
    return float(beta[0]), float(err), info


def abs_moment_limit(s: float, h: float, N_grid: Sequence[int], cfg: ChainConfig) -> MomentEstimate:
    """E[|X(s)|^(2h)] from E_N|sum x / N|^(2h) on a grid of N, extrapolated in 1/N."""
    if not (-0.5 < h < s + 0.5):
        raise DomainError(f"need -1/2 < h < s + 1/2 (s={s}, h={h})")
    meta = {"s": s, "h": h, "N_grid": list(N_grid), "seed": cfg.seed,
            "proven_range": in_proven_range(h), "extrapolation": "E_N = E_inf + c/N (empirical)"}
    if not in_proven_range(h):
        meta["range_label"] = "conjectural range"
    if h == 0:
        return MomentEstimate(1.0, 0.0, Method.MCMC, meta)
    vals, errs, accs = [], [], []
    for i, N in enumerate(N_grid):
        sub = ChainConfig(**{**cfg.__dict__, "seed": (cfg.seed + 7919 * (i + 1)) % 2**64})
        est = hp_abs_moment(s, N, 2.0 * h, sub, scale_by_N=True)
        vals.append(est.value)
        errs.append(est.abs_error)
        accs.append(est.metadata["acceptance"])
    value, err, info = extrapolate_inverse_N(N_grid, vals, errs)
    meta.update(E_N=vals, E_N_errors=errs, acceptance=accs, fit=info)
    return MomentEstimate(value, err, Method.MCMC, meta)


# --- Pearson IV diagonals --------------------------------------------------------------


@dataclass
class DiagonalCheck:
    ks_statistic: float
    ks_pvalue: float
    critical_1pct: float
    exchange_pvalue: float
    max_trace_defect: float
    n: int

    @property
    def passed(self) -> bool:
        return self.ks_statistic < self.critical_1pct and self.exchange_pvalue > 0.01


def cayley_matrices(U: np.ndarray) -> np.ndarray:
    """H = i (I + U)(I - U)^(-1); its eigenvalues are -cot(theta/2)."""
    eye = np.eye(U.shape[-1])
    # (I+U) and (I-U)^(-1) commute, so H = i (I-U)^(-1) (I+U)
    return 1j * np.linalg.solve(eye - U, eye + U)


def pearson_diagonal_check(s: float, n: int, seed: int, N: int = 16, batch: int = 2000) -> DiagonalCheck:
    """KS distance of Cayley-transformed Haar diagonals to the s = 0 Pearson IV (Cauchy) law."""
    if s != 0:
        raise DomainError("matrix-level samples are available only at s = 0")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    first, second, defects = [], [], []
    done = 0
    while done < n:
        m = min(batch, n - done)
        U = haar_unitaries(N, m, rng)
        H = cayley_matrices(U)
        diag = np.diagonal(H, axis1=1, axis2=2).real
        theta = np.mod(np.angle(np.linalg.eigvals(U)), TWO_PI)
        eig_sum = -cayley_points(theta).sum(axis=1)
        scale = np.abs(cayley_points(theta)).sum(axis=1) + np.abs(diag).sum(axis=1)
        defects.append(np.abs(diag.sum(axis=1) - eig_sum) / scale)
        first.append(diag[:, 0])
        second.append(diag[:, 1])
        done += m
    a, b = np.concatenate(first), np.concatenate(second)
    ks = stats.kstest(a, lambda x: pearson_iv_cdf(0.0, x))
    ex = stats.ks_2samp(a, b)
    crit = stats.kstwo.ppf(0.99, n)
    return DiagonalCheck(float(ks.statistic), float(ks.pvalue), float(crit), float(ex.pvalue),
                         float(np.max(np.concatenate(defects))), n)


# --- persistence -----------------------------------------------------------------------


def write_samples_csv(path, samples: Sequence[EigenvalueSample] | Iterator[EigenvalueSample]) -> int:
    """One row per sample: origin followed by the N points."""
    count = 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for smp in samples:
            w.writerow([smp.origin.value, *[repr(float(v)) for v in smp.points]])
            count += 1
    return count


def read_samples_csv(path) -> list[EigenvalueSample]:
    with open(path, newline="") as fh:
        return [EigenvalueSample(np.array([float(v) for v in row[1:]]), Origin(row[0]))
                for row in csv.reader(fh)]
