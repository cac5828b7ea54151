"""Metropolis chains, Haar sampling and the 1/N extrapolation."""

import math
import warnings

import numpy as np
import pytest
from scipy import stats

from jointmoments import ensemble, quadrature
from jointmoments.errors import DomainError, ExtrapolationError, Method
from jointmoments.specfun import pearson_iv_cdf

SMALL = dict(burn_in=100, n_samples=20_000, n_chains=64)


def test_chain_config_validation():
    with pytest.raises(DomainError):
        ensemble.ChainConfig(proposal_scale=0.0)
    with pytest.raises(DomainError):
        ensemble.ChainConfig(n_chains=0)
    with pytest.raises(DomainError):
        ensemble.ChainConfig(seed=-1)
    with pytest.raises(DomainError):
        ensemble.ChainConfig(workers=0)


def test_block_generators_reproducible_and_distinct():
    a = [g.random() for g in ensemble.block_generators(5, 3)]
    b = [g.random() for g in ensemble.block_generators(5, 3)]
    assert a == b
    assert len(set(a)) == 3


def test_chains_reproducible_and_thread_independent():
    cfg = ensemble.ChainConfig(seed=11, burn_in=20, n_samples=2000, n_chains=32, chains_per_block=8)
    r1 = ensemble.run_chains(1.0, 6, cfg)
    r2 = ensemble.run_chains(1.0, 6, ensemble.ChainConfig(**{**cfg.__dict__, "workers": 4}))
    np.testing.assert_array_equal(r1.sums, r2.sums)
    r3 = ensemble.run_chains(1.0, 6, ensemble.ChainConfig(**{**cfg.__dict__, "seed": 12}))
    assert not np.array_equal(r1.sums, r3.sums)


@pytest.mark.parametrize("s, N", [(0.0, 10), (1.0, 25), (0.5, 60)])
def test_acceptance_after_tuning(s, N):
    run = ensemble.run_chains(s, N, ensemble.ChainConfig(seed=3, burn_in=100, n_samples=640, n_chains=64))
    assert 0.2 <= run.acceptance <= 0.6


def test_tilt_must_be_normalisable():
    with pytest.raises(DomainError):
        ensemble.run_chains(1.0, 2, ensemble.ChainConfig(), tilt=3.0)


def test_one_point_marginal_is_pearson():
    # N = 1: the Hua-Pickrell law is the Pearson IV law itself
    s = 1.0
    run = ensemble.run_chains(s, 1, ensemble.ChainConfig(seed=8, burn_in=200, n_samples=64 * 400,
                                                         n_chains=64, thinning=5))
    x = run.sums.ravel()
    ks = stats.kstest(x, lambda v: pearson_iv_cdf(s, v))
    assert ks.pvalue > 1e-3


@pytest.mark.parametrize("tilt", [True, False])
def test_second_moment_of_sum_mcmc(tilt):
    s, N = 2.0, 3
    est = ensemble.hp_abs_moment(s, N, 2.0, ensemble.ChainConfig(seed=21, **SMALL), tilt=tilt)
    exact = N * (N + 2 * s) / (4 * s * s - 1)
    assert abs(est.value - exact) <= 4 * est.abs_error
    assert est.metadata["tilted"] is tilt


def test_abs_moment_against_quadrature():
    s, N, p = 1.0, 2, 1.0
    ref = quadrature.sum_power_expectation(s, N, p).value
    est = ensemble.hp_abs_moment(s, N, p, ensemble.ChainConfig(seed=5, **SMALL))
    assert abs(est.value - ref) <= 4 * est.abs_error


def test_untilted_heavy_tail_withholds_error():
    with pytest.warns(RuntimeWarning):
        est = ensemble.hp_abs_moment(1.0, 2, 2.0, ensemble.ChainConfig(seed=2, **SMALL), tilt=False)
    assert math.isinf(est.abs_error)


def test_joint_moment_mcmc():
    est = ensemble.joint_moment_mcmc(1.0, 1.0, 2, ensemble.ChainConfig(seed=9, **SMALL))
    assert est.method is Method.MCMC
    assert abs(est.value - 2.0) <= 4 * est.abs_error


def test_haar_unitaries_are_unitary(rng):
    U = ensemble.haar_unitaries(5, 50, rng)
    eye = np.eye(5)
    np.testing.assert_allclose(U @ np.conj(np.swapaxes(U, -1, -2)), np.broadcast_to(eye, U.shape), atol=1e-12)


def test_haar_trace_moments(rng):
    # E|tr U^k|^2 = min(k, N) under Haar measure
    U = ensemble.haar_unitaries(4, 40_000, rng)
    t1 = np.abs(np.trace(U, axis1=1, axis2=2)) ** 2
    t2 = np.abs(np.trace(U @ U, axis1=1, axis2=2)) ** 2
    for vals, target in ((t1, 1.0), (t2, 2.0)):
        se = vals.std() / math.sqrt(vals.size)
        assert abs(vals.mean() - target) <= 4 * se


def test_cue_angles_and_samples(rng):
    th = ensemble.cue_angles(6, 10, rng)
    assert th.shape == (10, 6)
    assert np.all((th >= 0) & (th < 2 * np.pi))
    a = ensemble.cue_sample(6, 4)
    b = ensemble.cue_sample(6, 4)
    np.testing.assert_array_equal(a.angles, b.angles)
    x = ensemble.cayley_transform(a)
    assert x.origin is ensemble.Origin.CUE_CAYLEY
    np.testing.assert_allclose(np.sort(x.points), np.sort(1 / np.tan(a.angles / 2)))


def test_sample_types_validate():
    with pytest.raises(DomainError):
        ensemble.EigenvalueSample(np.array([1.0, 2.0]), ensemble.Origin.MCMC)
    with pytest.raises(DomainError):
        ensemble.EigenvalueSample(np.array([np.inf]), ensemble.Origin.MCMC)
    with pytest.raises(DomainError):
        ensemble.ThetaSample(np.array([7.0]))


def test_cayley_matrices_spectrum(rng):
    U = ensemble.haar_unitaries(6, 3, rng)
    H = ensemble.cayley_matrices(U)
    np.testing.assert_allclose(H, np.conj(np.swapaxes(H, -1, -2)), atol=1e-9)
    theta = np.mod(np.angle(np.linalg.eigvals(U)), 2 * np.pi)
    for h, th in zip(H, theta):
        np.testing.assert_allclose(np.sort(np.linalg.eigvalsh(h)), np.sort(-1 / np.tan(th / 2)), rtol=1e-8, atol=1e-8)


@pytest.mark.parametrize("N", [1, 3, 7])
def test_cue_moment_at_h0(N):
    # F_N(1, 0) = N + 1
    est = ensemble.joint_moment_cue(1.0, 0.0, N, 50_000, seed=7)
    assert abs(est.value - (N + 1)) <= 4 * est.abs_error


def test_cue_against_quadrature():
    ref = quadrature.joint_moment_quadrature(2.0, 0.5, 2).value
    est = ensemble.joint_moment_cue(2.0, 0.5, 2, 100_000, seed=1)
    assert abs(est.value - ref) <= 4 * est.abs_error


def test_cue_heavy_tail_warning():
    with pytest.warns(RuntimeWarning):
        ensemble.joint_moment_cue(1.0, 1.45, 2, 1000, seed=1)
    with pytest.raises(DomainError):
        ensemble.joint_moment_cue(1.0, 0.5, 100, 10, seed=1)


def test_extrapolation_recovers_line():
    N = [25, 50, 100, 200]
    vals = [0.38 + 0.4 / n for n in N]
    value, err, info = ensemble.extrapolate_inverse_N(N, vals, [1e-3] * 4)
    assert value == pytest.approx(0.38, abs=1e-12)
    assert info["slope"] == pytest.approx(0.4, rel=1e-9)
    assert err > 0


def test_extrapolation_rejects_inconsistent_fit():
    with pytest.raises(ExtrapolationError):
        ensemble.extrapolate_inverse_N([25, 50, 100, 200], [1.0, 0.0, 1.0, 0.0], [1e-3] * 4)
    with pytest.raises(ExtrapolationError):
        ensemble.extrapolate_inverse_N([25, 50], [1.0, 1.0], [math.inf, 1.0])


def test_abs_moment_limit_small_grid():
    cfg = ensemble.ChainConfig(seed=4, burn_in=100, n_samples=20_000, n_chains=64)
    est = ensemble.abs_moment_limit(1.0, 0.5, [10, 20, 40], cfg)
    target = (math.e**2 - 5) / (2 * math.pi)
    assert abs(est.value - target) <= 4 * est.abs_error + 0.02
    assert est.metadata["proven_range"]
    neg = ensemble.abs_moment_limit(1.0, 0.0, [10], cfg)
    assert neg.value == 1.0
    with pytest.raises(DomainError):
        ensemble.abs_moment_limit(1.0, 1.5, [10], cfg)


def test_hill_index_on_pareto():
    x = stats.pareto.rvs(3.0, size=200_000, random_state=np.random.default_rng(1))
    alpha, se = ensemble.hill_tail_index(x)
    assert abs(alpha - 3.0) <= 4 * se


def test_mcmc_stream_and_csv_roundtrip(tmp_path):
    cfg = ensemble.ChainConfig(seed=1, burn_in=20, n_samples=50, n_chains=8)
    samples = list(ensemble.mcmc_sample_hp(1.0, 4, cfg))
    assert len(samples) == 50
    assert all(s.origin is ensemble.Origin.MCMC for s in samples)
    path = tmp_path / "samples.csv"
    assert ensemble.write_samples_csv(path, samples) == 50
    back = ensemble.read_samples_csv(path)
    for a, b in zip(samples, back):
        np.testing.assert_array_equal(a.points, b.points)


def test_diagonal_check_small():
    res = ensemble.pearson_diagonal_check(0.0, 2000, seed=3, N=8)
    assert res.max_trace_defect < 1e-9
    assert res.n == 2000
    with pytest.raises(DomainError):
        ensemble.pearson_diagonal_check(1.0, 10, seed=0)
