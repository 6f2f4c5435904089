import math

import mpmath as mp
import numpy as np
import pytest
from scipy import integrate, stats

from sklab import limits, models
from sklab.errors import DomainError, UnsupportedError
from sklab.limits import ClusterMarkSample, LimitSpec
from sklab.models import MovingMaximaModel, NormingMode
from sklab.rng import stream

MM11 = MovingMaximaModel(0.5, (1.0, 1.0))

# n * lam^(1/alpha) * Gamma(1 - 1/alpha, lam u^-alpha), lam = -log(1 - 1/n), via mpmath (50 digits)
KARAMATA_FROZEN = {
    (0.3, 0.1): 0.08551098624624631,
    (0.5, 0.25): 0.49998670483840907,
    (0.5, 1.0): 0.9999862616912022,
    (0.8, 0.1): 2.3688315365481616,
    (0.8, 1.0): 3.844998921953834,
}


def karamata_oracle(alpha, u, n):
    mp.mp.dps = 50
    a = mp.mpf(alpha)
    lam = -mp.log1p(-mp.mpf(1) / n)
    return float(n * lam ** (1 / a) * mp.gammainc(1 - 1 / a, lam * mp.mpf(u) ** (-a)))


def test_mm11_constants():
    s = limits.limit_spec_mm11(0.5)
    assert (s.theta, s.c_minus, s.r) == (0.5, 0.0, 1.0)
    assert s.c_plus == pytest.approx(math.sqrt(2), rel=1e-15)
    assert s.drift == pytest.approx(0.70711, abs=1e-5)
    with pytest.raises(DomainError):
        limits.limit_spec_mm11(1.0)


def test_general_moving_maxima_closed_form():
    for a in (0.3, 0.5, 0.9):
        s = limits.limit_spec_moving_maxima(MovingMaximaModel(a, (1.0, 1.0)))
        ref = limits.limit_spec_mm11(a)
        assert s.theta == pytest.approx(ref.theta)
        assert s.c_plus == pytest.approx(ref.c_plus)
    iid = limits.limit_spec_moving_maxima(MovingMaximaModel(0.5, (1.0,)))
    assert iid.theta == 1.0 and iid.c_plus == 1.0
    mm2 = limits.limit_spec_moving_maxima(MovingMaximaModel(0.5, (1.0, 1.0, 1.0)))
    assert mm2.theta == pytest.approx(1 / 3)


def test_drift_equals_first_moment_of_levy_measure():
    s = LimitSpec(0.6, 0.4, 1.3, 0.5, 1.0)
    dens = lambda x, c: c * s.theta * s.alpha * x ** (-s.alpha - 1)  # noqa: E731
    pos, _ = integrate.quad(lambda x: x * dens(x, s.c_plus), 0, 1)
    neg, _ = integrate.quad(lambda x: x * dens(x, s.c_minus), 0, 1)
    assert s.drift == pytest.approx(pos - neg, rel=1e-9)


def test_spec_validation_and_round_trip():
    with pytest.raises(DomainError):
        LimitSpec(0.5, 0.0, 1.0)
    with pytest.raises(DomainError):
        LimitSpec(0.5, 0.5, -1.0)
    s = limits.limit_spec_mm11(0.4)
    back = LimitSpec.from_dict(s.to_dict())
    assert back == s
    np.testing.assert_array_equal(back.marks.u, [2.0])


def test_default_mark_law_moments():
    s = LimitSpec(0.5, 0.5, 1.2, 0.3, 0.6)
    u, r, w = s.mark_law()
    assert np.sum(w * np.where(u > 0, np.abs(u) ** 0.5, 0)) == pytest.approx(1.2)
    assert np.sum(w * np.where(u < 0, np.abs(u) ** 0.5, 0)) == pytest.approx(0.3)
    assert np.sum(w * r**0.5) == pytest.approx(0.6)
    u1, r1, _ = LimitSpec(0.5, 0.5, 2**0.5).mark_law()
    assert u1[0] == pytest.approx(2.0) and r1[0] == 1.0


def test_extremal_cdf():
    s = limits.limit_spec_mm11(0.5)
    assert limits.extremal_cdf(s, 1.0, 1e30) == pytest.approx(1.0)
    assert limits.extremal_cdf(s, 1.0, 1.0) == pytest.approx(math.exp(-0.5), rel=1e-15)
    assert limits.extremal_cdf(s, 0.5, 1.0) == pytest.approx(math.exp(-0.25), rel=1e-15)
    with pytest.raises(DomainError):
        limits.extremal_cdf(s, 1.0, 0.0)
    # innovation norming: scale (1 + 1)^2 = 4 gives exp(-x^-alpha)
    sc = limits.norming_scale(MM11, NormingMode.INNOVATION)
    assert sc == pytest.approx(4.0)
    assert limits.extremal_cdf(s, 1.0, 2.0, sc) == pytest.approx(math.exp(-(2.0**-0.5)))


def test_tail_bound_identity():
    # direct partial sum to 2e6 plus the integral estimate of the rest
    from scipy.special import gammaln

    for alpha in (0.5, 0.7):
        p = 1 / alpha
        K, N = 12, 2_000_000
        i = np.arange(K + 1, N + 1, dtype=float)
        direct = np.sum(np.exp(gammaln(i - p) - gammaln(i)))
        rest = (N + 0.5) ** (1 - p) / (p - 1)
        s = LimitSpec(alpha, 1.0, 1.0)
        assert limits.truncation_tail_bound(s, K) == pytest.approx(direct + rest, rel=1e-6)
    s = limits.limit_spec_mm11(0.5)
    assert limits.truncation_tail_bound(s, 10_000) == pytest.approx(0.25 / 9_999 * 2, rel=1e-12)
    assert limits.truncation_tail_bound(s, 10_000) < 1e-3


def test_unsupported_alpha():
    s = LimitSpec(1.2, 0.5, 1.0)
    with pytest.raises(UnsupportedError):
        limits.simulate_limit_joint(s, [1.0], 10, 1, 0)
    with pytest.raises(UnsupportedError):
        _ = s.drift


def test_w_extremal_cdf_at_one():
    s = limits.limit_spec_mm11(0.5)
    ls = limits.simulate_limit_joint(s, [0.5, 1.0], truncation=10, reps=100_000, seed=1)
    assert abs(np.mean(ls.w[:, 1] <= 1.0) - math.exp(-0.5)) <= 0.005
    assert np.all(ls.w[:, 1] >= ls.w[:, 0])


def test_w_ks_against_extremal_cdf():
    s = limits.limit_spec_mm11(0.5)
    ls = limits.simulate_limit_joint(s, [0.5, 1.0], truncation=60, reps=100_000, seed=2)
    for j, t in enumerate((0.5, 1.0)):
        ks = stats.kstest(ls.w[:, j], lambda x, t=t: limits.extremal_cdf(s, t, x)).statistic
        assert ks <= 0.01


def test_median_stable_in_truncation():
    s = limits.limit_spec_mm11(0.5)
    a = limits.simulate_limit_joint(s, [1.0], 1_000, 2_000, 4)
    b = limits.simulate_limit_joint(s, [1.0], 10_000, 2_000, 4)
    assert abs(np.median(a.v) - np.median(b.v)) < 0.01


def test_scaling_homogeneity():
    s = limits.limit_spec_mm11(0.5)
    a = limits.simulate_limit_joint(s, [0.3, 1.0], 500, 200, 6)
    b = limits.simulate_limit_joint(s, [0.3, 1.0], 500, 200, 6, scale=2.0)
    np.testing.assert_array_equal(b.v, 2.0 * a.v)
    np.testing.assert_array_equal(b.w, 2.0 * a.w)
    c = limits.simulate_limit_joint(s, [0.3, 1.0], 500, 200, 6, scale=3.7)
    np.testing.assert_allclose(c.v, 3.7 * a.v, rtol=1e-12)
    np.testing.assert_allclose(c.w, 3.7 * a.w, rtol=1e-15)


def test_replica_batches_are_consistent():
    s = limits.limit_spec_mm11(0.5)
    whole = limits.simulate_limit_joint(s, [1.0], 300, 10, 9)
    part = limits.simulate_limit_joint(s, [1.0], 300, 4, 9, first_replica=6)
    np.testing.assert_array_equal(whole.v[6:], part.v)


def test_poisson_point_counts():
    theta, alpha = 0.5, 0.5
    for y in (1.0, 2.0):
        counts = np.array([np.sum(limits.poisson_points(theta, alpha, 50, stream(3, k)) > y) for k in range(10_000)])
        mean = theta * y**-alpha
        bins = np.arange(0, 4)
        obs = np.array([np.sum(counts == b) for b in bins] + [np.sum(counts >= 4)])
        probs = np.append(stats.poisson.pmf(bins, mean), stats.poisson.sf(3, mean))
        _, pval = stats.chisquare(obs, probs * counts.size)
        assert pval > 0.001


def test_mark_resampling_law():
    marks = ClusterMarkSample([1.0, 3.0], [1.0, 1.0])
    s = LimitSpec(0.5, 1.0, marks.c_plus(0.5), 0.0, 1.0, marks)
    ls = limits.simulate_limit_joint(s, [1.0], 1, 20_000, 3)
    ratio = ls.v[:, 0] / ls.w[:, 0]
    assert set(np.unique(ratio.round(12))) == {1.0, 3.0}
    assert abs(np.mean(ratio.round(12) == 3.0) - 0.5) < 0.02


def test_empirical_cluster_marks_mm11():
    cm = limits.empirical_cluster_marks(MM11, 50, 0.01, 40, seed=3, n=1_000_000)
    assert not cm.empty and len(cm) > 100
    assert 1.9 <= np.mean(cm.u) <= 2.1
    assert np.all(cm.u >= 0) and cm.c_minus(0.5) == 0.0
    assert cm.c_plus(0.5) == pytest.approx(math.sqrt(2), rel=0.05)
    assert np.all(cm.r == 1.0)


def test_empirical_cluster_marks_iid_and_empty():
    iid = MovingMaximaModel(0.5, (1.0,))
    cm = limits.empirical_cluster_marks(iid, 50, 0.01, 20, seed=4, n=1_000_000)
    assert np.mean(cm.u) == pytest.approx(1.0, abs=0.02)
    assert np.all(cm.r == 1.0)
    none = limits.empirical_cluster_marks(iid, 50, 1e12, 1, seed=4, n=10_000)
    assert none.empty


@pytest.mark.parametrize("coeffs,theta", [((1.0,), 1.0), ((1.0, 1.0), 0.5), ((1.0, 1.0, 1.0), 1 / 3)])
def test_blocks_estimator_calibration(coeffs, theta):
    m = MovingMaximaModel(0.5, coeffs)
    x = models.moving_maxima_sequence(m, 1_000_000, 12)
    est = limits.blocks_extremal_index_estimator(x, models.norming(m, 2_000), 100)
    assert est.defined
    assert 0 < est.theta <= 1
    assert abs(est.theta - theta) <= 0.05


def test_blocks_estimator_undefined():
    est = limits.blocks_extremal_index_estimator(np.ones(100), 5.0, 10)
    assert not est.defined and math.isnan(est.theta)


def test_tail_process_two_branches():
    m = MM11
    x_thr = models.norming(m, 1_000)
    tp = limits.empirical_tail_process(m, x_thr, 3, 1_000_000, seed=5)
    assert tp.defined
    rel = tp.relative[1]
    assert abs(np.mean((rel > 0.99) & (rel <= 1.01)) - 0.5) <= 0.03
    # beyond the order the anchor is forgotten
    assert np.median(tp.scaled[3]) < 0.01
    iid = limits.empirical_tail_process(MovingMaximaModel(0.5, (1.0,)), x_thr, 1, 1_000_000, seed=5)
    assert np.quantile(iid.scaled[1], 0.9) < 0.1


def test_tail_process_undefined():
    tp = limits.empirical_tail_process(MM11, 1e30, 1, 1_000, seed=1)
    assert not tp.defined and tp.events == 0


@pytest.mark.parametrize("key", sorted(KARAMATA_FROZEN))
def test_karamata_against_frozen_oracle(key):
    alpha, u = key
    got = limits.karamata_truncated_moment(MovingMaximaModel(alpha, (1.0, 1.0)), u, 10**6)
    assert got == pytest.approx(KARAMATA_FROZEN[key], rel=1e-12)


def test_karamata_live_oracle_and_model_independence():
    for alpha in (0.3, 0.5, 0.8):
        for u in (0.1, 1.0):
            for n in (10**4, 10**6):
                a = limits.karamata_truncated_moment(MovingMaximaModel(alpha, (1.0,)), u, n)
                b = limits.karamata_truncated_moment(MovingMaximaModel(alpha, (2.0, 0.5, 1.0)), u, n)
                assert a == b
                assert a == pytest.approx(karamata_oracle(alpha, u, n), rel=1e-10)


def test_karamata_limit_examples():
    m = MovingMaximaModel(0.5, (1.0, 1.0))
    assert limits.karamata_truncated_moment(m, 1.0, 10**6) == pytest.approx(1.0, rel=0.02)
    assert limits.karamata_truncated_moment(m, 0.25, 10**6) == pytest.approx(0.5, rel=0.02)
    us = np.linspace(0.01, 2, 50)
    vals = [limits.karamata_limit(0.5, u) for u in us]
    assert np.all(np.diff(vals) > 0)
    assert limits.karamata_limit(0.5, 1e-12) < 1e-5
