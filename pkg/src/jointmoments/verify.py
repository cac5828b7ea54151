"""Cross-check matrix shared by ``jointmoments verify`` and the acceptance tests.

Each check recomputes a quantity by independent routes and compares them with
a fixed tolerance.  ``fast`` checks are deterministic; ``full`` adds the Monte
Carlo checks, whose outcomes are reproducible for a given seed.
"""

from __future__ import annotations

import math
import time
from collections.abc import Callable
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import ensemble, exact, kernel, painleve, quadrature, specfun
from .errors import DivergenceError, JointMomentsError

LEVELS = ("fast", "full")
HALF_INTEGER_TARGET = (math.e**2 - 5.0) / (2.0 * math.pi)


@dataclass
class CheckResult:
    index: int
    name: str
    passed: bool
    seconds: float
    details: dict[str, Any] = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{self.index:2d}] {status}  {self.name:<34s} {self.seconds:8.2f} s"


def _rel(a: float, b: float) -> float:
    return abs(a - b) / abs(b)


def check_closed_form_ladder(seed: int) -> tuple[bool, dict]:
    ladder = max(_rel(math.exp(exact.log_F_N_s0(1.0, N)), N + 1.0) for N in range(1, 51))
    lim1 = _rel(math.exp(exact.log_F_limit_s0(1.0)), 1.0)
    lim2 = _rel(math.exp(exact.log_F_limit_s0(2.0)), 1.0 / 12.0)
    # the asymptotic branch (non-integer arguments) must reproduce the factorial product
    branch = max(abs(specfun._log_barnes_g_large(n - 1.0) - specfun.log_barnes_g(n)) / specfun.log_barnes_g(n)
                 for n in (25, 40, 60))
    worst = max(ladder, lim1, lim2)
    return worst <= 1e-10 and branch <= 1e-12, {"max_rel_error": worst, "asymptotic_branch": branch}


def check_second_moment(seed: int) -> tuple[bool, dict]:
    ok, out = True, {}
    for s in (1, 2):
        target = 1.0 / (4 * s * s - 1)
        quad = quadrature.even_moment_X_quadrature(s, 1, order=32).value
        kern = kernel.variance_via_kernel(float(s)).value
        pain = painleve.painleve_moment(s, 1).value
        bess = painleve.bessel_det_moment(s, 1).value
        errs = {"quadrature": abs(quad - target), "kernel": abs(kern - target),
                "painleve": abs(pain - target), "bessel_det": abs(bess - target)}
        ok &= (errs["quadrature"] <= 1e-8 and errs["kernel"] <= 1e-3
               and errs["painleve"] <= 1e-12 and errs["bessel_det"] <= 1e-10)
        out[f"s={s}"] = errs
    return ok, out


def check_fourth_moment(seed: int) -> tuple[bool, dict]:
    vals = {
        "painleve": painleve.painleve_moment(2, 2).value,
        "bessel_det": painleve.bessel_det_moment(2, 2).value,
        "quadrature": quadrature.even_moment_X_quadrature(2, 2, order=16).value,
    }
    names = list(vals)
    worst = max(abs(vals[a] - vals[b]) for i, a in enumerate(names) for b in names[i + 1:])
    return worst <= 1e-4, {"values": vals, "max_pairwise": worst}


def check_half_integer_moment(seed: int) -> tuple[bool, dict]:
    cfg = ensemble.ChainConfig(seed=seed, burn_in=200, n_samples=100_000, n_chains=64)
    est = ensemble.abs_moment_limit(1.0, 0.5, [25, 50, 100, 200], cfg)
    pred = exact.zeta_prediction(1.0, 0.5, est.value)
    zeta_target = HALF_INTEGER_TARGET / 2.0
    ok = _rel(est.value, HALF_INTEGER_TARGET) <= 0.05 and _rel(pred, zeta_target) <= 0.05
    return ok, {"E_abs_X": est.value, "error": est.abs_error, "target": HALF_INTEGER_TARGET,
                "zeta_prediction": pred, "zeta_target": zeta_target,
                "E_N": est.metadata["E_N"], "acceptance": est.metadata["acceptance"]}


def check_finite_N_routes(seed: int) -> tuple[bool, dict]:
    ok, out = True, {}
    for i, (s, h, N) in enumerate([(1.0, 1.0, 2), (2.0, 0.5, 2), (0.75, 0.6, 3)]):
        cfg = ensemble.ChainConfig(seed=seed + i, n_samples=200_000, n_chains=256,
                                   chains_per_block=256)
        ests = {
            "quadrature": quadrature.joint_moment_quadrature(s, h, N),
            "mcmc": ensemble.joint_moment_mcmc(s, h, N, cfg),
            "cue": ensemble.joint_moment_cue(s, h, N, 200_000, seed + i),
        }
        names = list(ests)
        agree = all(ests[a].agrees_with(ests[b], 3.0)
                    for j, a in enumerate(names) for b in names[j + 1:])
        ok &= agree
        out[f"({s},{h},{N})"] = {k: (e.value, e.abs_error) for k, e in ests.items()}
    return ok, out


def check_kernel_identities(seed: int) -> tuple[bool, dict]:
    x = np.round(np.arange(1, 101) * 0.1, 10)
    diag_err = float(np.max(np.abs(kernel.kernel_diagonal(0.0, x) * 2 * np.pi * x**2 - 1.0)))
    ok = diag_err <= 1e-10
    integrals = {}
    for s, h in [(0.0, 0.0), (0.5, 0.5), (1.0, 1.0), (1.0, -0.25), (2.0, 1.0), (2.0, 2.0)]:
        try:
            tail, bulk = kernel.moment_integrals_checked(s, h, 10.0)
        except JointMomentsError:
            ok = False
            continue
        ok &= bool(np.isfinite(tail) and np.isfinite(bulk))
        integrals[f"({s},{h})"] = (tail, bulk)
    flagged = 0
    for s in (0.0, 1.0, 2.0):
        try:
            kernel.moment_integrals(s, s + 0.5, 10.0)
        except DivergenceError:
            flagged += 1
    ok &= flagged == 3
    spectra = {}
    for s in (0.0, 1.0):
        ev = kernel.NystromOperator.build(s, 0.01, 200.0, 10).eigenvalues()
        spectra[s] = (float(ev.min()), float(ev.max()))
        ok &= ev.min() >= -1e-6 and ev.max() <= 1 + 1e-6
    return ok, {"diagonal_max_rel": diag_err, "integrals": integrals,
                "divergence_flagged": flagged, "spectra": spectra}


def check_fredholm(seed: int) -> tuple[bool, dict]:
    s, dt = 2.0, 0.2
    at0 = kernel.fredholm_char_function(s, 0.0)
    plus = kernel.fredholm_char_function(s, dt)
    minus = kernel.fredholm_char_function(s, -dt)
    spread = max(plus.abs_error, minus.abs_error, 1e-12)
    real = abs(plus.metadata["imag"]) <= spread and abs(minus.metadata["imag"]) <= spread
    even = abs(plus.value - minus.value) <= spread
    var = -4.0 * (plus.value + minus.value - 2.0) / dt**2
    ok = at0.value == 1.0 and real and even and _rel(var, 1.0 / 15.0) <= 0.1
    return ok, {"phi0": at0.value, "phi_plus": plus.value, "phi_minus": minus.value,
                "spread": spread, "variance": var}


def check_finite_N_painleve(seed: int) -> tuple[bool, dict]:
    t = np.linspace(0.1, 1.0, 10)
    est = painleve.finite_N_residual(2, 2, t)
    return est.value <= 1e-3, {"max_residual": est.value}


def check_combinatorial(seed: int) -> tuple[bool, dict]:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(500):
        N = int(rng.integers(1, 9))
        z = rng.normal(size=N) + 1j * rng.normal(size=N)
        lhs, rhs = exact.elementary_symmetric_identity(z)
        worst = max(worst, abs(lhs - rhs) / abs(lhs))
    return worst <= 1e-12, {"max_rel_error": worst}


def check_distributional(seed: int) -> tuple[bool, dict]:
    res = ensemble.pearson_diagonal_check(0.0, 10_000, seed, N=16)
    ok = res.ks_statistic < res.critical_1pct and res.max_trace_defect <= 1e-9
    return ok, {"ks": res.ks_statistic, "critical_1pct": res.critical_1pct,
                "ks_pvalue": res.ks_pvalue, "exchange_pvalue": res.exchange_pvalue,
                "max_trace_defect": res.max_trace_defect}


CHECKS: list[tuple[int, str, str, Callable[[int], tuple[bool, dict]]]] = [
    (1, "closed-form ladder", "fast", check_closed_form_ladder),
    (2, "second moment, four routes", "fast", check_second_moment),
    (3, "fourth moment at s=2", "fast", check_fourth_moment),
    (4, "half-integer moment (MCMC)", "full", check_half_integer_moment),
    (5, "finite-N route agreement", "full", check_finite_N_routes),
    (6, "kernel identities", "fast", check_kernel_identities),
    (7, "Fredholm characteristic function", "fast", check_fredholm),
    (8, "finite-N sigma equation", "fast", check_finite_N_painleve),
    (9, "combinatorial identity", "fast", check_combinatorial),
    (10, "Cayley-Haar diagonal law", "full", check_distributional),
]


def run_check(index: int, seed: int = 42) -> CheckResult:
    for i, name, _, fn in CHECKS:
        if i == index:
            t0 = time.perf_counter()
            try:
                passed, details = fn(seed)
            except JointMomentsError as exc:
                passed, details = False, {"exception": f"{type(exc).__name__}: {exc}"}
            return CheckResult(i, name, bool(passed), time.perf_counter() - t0, details)
    raise KeyError(index)


def run_checks(level: str = "fast", seed: int = 42,
               report: Callable[[CheckResult], None] | None = None) -> list[CheckResult]:
    if level not in LEVELS:
        raise ValueError(f"level must be one of {LEVELS}")
    results = []
    for i, _, lvl, _ in CHECKS:
        if lvl == "fast" or level == "full":
            res = run_check(i, seed)
            results.append(res)
            if report is not None:
                report(res)
    return results
