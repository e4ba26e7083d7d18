import math

import numpy as np
import pytest

from fkising.errors import (CorrelationLengthTooLarge, IncompatibleLambda,
                            InsufficientStatistics)
from fkising.harness import (ExponentFit, MassEstimate,
                             TruncatedCorrelationEstimate, _jackknife, _wls,
                             estimate_critical_2pt, extract_mass,
                             fold_critical_2pt, fold_normalization,
                             fold_truncated_2pt, free_vs_wired_test,
                             run_moments, run_pair_counts, run_trunc_pairs,
                             scaling_covariance_test, truncated_2pt)
from fkising.lattice import BETA_C


def test_wls_recovers_exact_line():
    x = np.array([1.0, 2, 3, 4])
    slope, icept = _wls(x, 2.5 * x - 1.0, np.ones(4))
    assert slope == pytest.approx(2.5)
    assert icept == pytest.approx(-1.0)


def test_jackknife_se_scaling():
    # jackknife SE of the mean matches sigma/sqrt(n) on iid blocks
    rng = np.random.default_rng(0)
    for n in (50, 200):
        reps = []
        for _ in range(400):
            x = rng.normal(size=n)
            blocks = x.reshape(n, 1).mean(axis=1)
            jk = np.array([np.delete(blocks, i).mean() for i in range(n)])
            reps.append(_jackknife(jk)[1])
        assert np.mean(reps) == pytest.approx(1 / math.sqrt(n), rel=0.1)


def test_exponent_fit_validation():
    with pytest.raises(InsufficientStatistics):
        ExponentFit(np.array([1.0, 2]), np.array([1.0, 2]), 1.0, 0.0, 0.1,
                    (1, 2))
    with pytest.raises(InsufficientStatistics):
        ExponentFit(np.array([1.0, 2, 3]), np.array([1.0, 2, 3]), np.nan,
                    0.0, 0.1, (1, 3))


def test_pair_counts_fold_replayable():
    rec = run_pair_counts(24, 1.0, [2, 3, 4, 6], sweeps=300, seed=1,
                          n_blocks=6, burn_in=50)
    r1 = fold_critical_2pt(rec)
    r2 = fold_critical_2pt(rec)
    assert r1.fit.slope == r2.fit.slope  # pure fold, bit-identical
    assert np.array_equal(r1.corr_fk, r2.corr_fk)


def test_zero_beta_error_path():
    rec = run_pair_counts(24, 1.0, [2, 3, 4], sweeps=100, seed=2, beta=0.0,
                          n_blocks=4, burn_in=10)
    with pytest.raises(InsufficientStatistics):
        fold_critical_2pt(rec)


def test_r_zero_is_invalid_and_r_cap():
    with pytest.raises(ValueError):
        run_pair_counts(24, 1.0, [0, 2], sweeps=10, seed=0)
    with pytest.raises(ValueError):
        run_pair_counts(24, 1.0, [2, 12], sweeps=10, seed=0)  # > L/4


def test_cross_estimator_agreement_small():
    """FK connectivity and spin-product estimators agree within three
    combined standard errors at criticality."""
    rec = run_pair_counts(32, 1.0, [2, 4, 8], sweeps=2500, seed=3,
                          n_blocks=10, burn_in=100)
    res = fold_critical_2pt(rec)
    z = np.abs(res.corr_fk - res.corr_spin) / np.sqrt(
        res.corr_fk_se ** 2 + res.corr_spin_se ** 2)
    assert np.all(z < 3.0)


def test_normalization_fold():
    rec = run_moments(1 / 16, sweeps=800, seed=4, n_blocks=8, burn_in=100)
    row = fold_normalization(rec)
    assert row.msq_spin > 0 and row.msq_fk > 0
    # FK side is the conditional expectation of the spin side
    assert abs(row.msq_spin - row.msq_fk) < 4 * max(row.diff_se, 1e-12)
    assert row.msq_wrong_exponent < row.msq_spin


def test_truncated_h0_reduces_to_plain_correlation():
    """At h=0 with free bc the mean-spin term vanishes by symmetry, so the
    truncated correlation equals the plain pair expectation."""
    from fkising.lattice import BoundaryCondition
    rec = run_trunc_pairs(32, 1.0, 0.0, [2, 4], sweeps=2000, seed=5,
                          bc=BoundaryCondition.FREE, n_blocks=8, burn_in=100)
    ests = fold_truncated_2pt(rec)
    plain = rec.pair_rb.sum(axis=0) / rec.block_sweeps.sum() / rec.npairs
    for e, p in zip(ests, plain):
        assert e.estimate == pytest.approx(p, abs=4 * e.stderr + 1e-4)
        assert e.estimate > 0  # ferromagnet positivity within noise


def test_truncated_2pt_matches_oracle_2x2():
    """Monte Carlo truncated correlation on the 2x2 agrees with exact
    enumeration within three standard errors."""
    from conftest import FREE
    from fkising import oracle
    from fkising.lattice import build_domain
    from fkising.state import SimParams
    dom = build_domain(1.0, (0, 0, 1, 1))
    beta, h = 0.4, 0.3
    ests = truncated_2pt(2, 1.0, h, [1], sweeps=30_000, seed=6, beta=beta,
                         bc=FREE, n_blocks=10, burn_in=200)
    dist = oracle.enumerate_ising(dom, SimParams(beta=beta, h=h), FREE)
    spins = oracle.decode_spins(dist).astype(float)
    # horizontal and vertical unit pairs averaged, matching the estimator
    pairs = [(0, 1), (2, 3), (0, 2), (1, 3)]
    exact = np.mean([
        float(np.dot(dist.probs, spins[:, i] * spins[:, j]))
        - float(np.dot(dist.probs, spins[:, i]))
        * float(np.dot(dist.probs, spins[:, j]))
        for i, j in pairs])
    assert ests[0].estimate == pytest.approx(exact, abs=3 * ests[0].stderr)


def test_extract_mass_synthetic():
    # synthetic pure decay: estimate recovers the rate
    rs = np.arange(2, 60)
    m_true = 0.21
    vals = 0.8 * rs ** -0.25 * np.exp(-m_true * rs)
    ests = [TruncatedCorrelationEstimate(r=float(r), estimate=v,
                                         stderr=1e-6 * v, h=1.0, a=1.0, L=64)
            for r, v in zip(rs, vals)]
    me = extract_mass(ests)
    assert me.mass == pytest.approx(m_true, rel=1e-3)


def test_extract_mass_window_guard():
    # correlation length far beyond the available window
    rs = np.arange(2, 12)
    vals = 0.8 * rs ** -0.25 * np.exp(-0.01 * rs)
    ests = [TruncatedCorrelationEstimate(r=float(r), estimate=v,
                                         stderr=1e-8, h=1.0, a=1.0, L=12)
            for r, v in zip(rs, vals)]
    with pytest.raises(CorrelationLengthTooLarge):
        extract_mass(ests)


def test_mass_zero_field_no_decay():
    # critical correlations: fitted rate indistinguishable from zero
    rs = np.arange(2, 50)
    vals = 0.7 * rs ** -0.25
    ests = [TruncatedCorrelationEstimate(r=float(r), estimate=v,
                                         stderr=1e-6, h=0.0, a=1.0, L=64)
            for r, v in zip(rs, vals)]
    with pytest.raises((InsufficientStatistics, CorrelationLengthTooLarge)):
        extract_mass(ests)


def test_incompatible_lambda():
    with pytest.raises(IncompatibleLambda):
        scaling_covariance_test(10, 1.0, 0.0, lam=1.55, n_samples=10)


def test_scaling_test_lambda_one_small():
    res = scaling_covariance_test(24, 1 / 24, 0.0, lam=1.0, n_samples=1200,
                                  seed=7, thin=2, burn_in=100)
    # identical protocols, independent seeds: KS at the sampling floor
    assert res.ks_stat < 3 * 1.36 * math.sqrt(2 / 1200)
    assert res.pvalue > 1e-4


def test_free_vs_wired_smoke():
    res = free_vs_wired_test(24, BETA_C, 400, seed=8, thin=2, burn_in=50)
    assert 0 <= res.ks_dual_matched <= 1
    assert res.n_samples == 400
