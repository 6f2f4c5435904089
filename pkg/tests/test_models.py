import math

import numpy as np
import pytest
from scipy import stats

from sklab import cadlag, models
from sklab.errors import DomainError
from sklab.harness.stats import hill_estimator
from sklab.models import MovingMaximaModel, NormingMode
from sklab.rng import stream

MM11 = MovingMaximaModel(0.5, (1.0, 1.0))


def test_model_validation():
    with pytest.raises(DomainError):
        MovingMaximaModel(1.0, (1.0,))
    with pytest.raises(DomainError):
        MovingMaximaModel(0.5, (0.0, 1.0))
    with pytest.raises(DomainError):
        MovingMaximaModel(0.5, (1.0, 0.0))
    with pytest.raises(DomainError):
        MovingMaximaModel(0.5, (1.0, -1.0, 1.0))
    m = MovingMaximaModel(0.5, (1.0, 0.0, 2.0))
    assert m.order == 2
    assert m.tail_constant == pytest.approx(1 + math.sqrt(2))


def test_frechet_fixed_point():
    for a in (0.3, 0.5, 2.0):
        assert models.frechet_from_uniform(math.exp(-1.0), a) == pytest.approx(1.0, rel=1e-15)


def test_frechet_cdf_and_hill():
    z = models.frechet_sample(0.5, 1_000_000, 7)
    assert np.all(z > 0)
    assert abs(np.mean(z <= 1.0) - math.exp(-1.0)) <= 0.002
    assert abs(hill_estimator(z, 10_000) - 0.5) <= 0.05


def test_frechet_sample_is_seeded():
    np.testing.assert_array_equal(models.frechet_sample(0.5, 10, 3), models.frechet_sample(0.5, 10, 3))
    with pytest.raises(DomainError):
        models.frechet_sample(0.5, 0, 3)


def test_iid_case_equals_innovations():
    m = MovingMaximaModel(0.5, (1.0,))
    x = models.moving_maxima_sequence(m, 50, 4)
    np.testing.assert_array_equal(x, models.frechet_sample(0.5, 50, 4))


def test_mm11_structure():
    z = models.frechet_sample(0.5, 1001, 5)
    x = models.moving_maxima_from_innovations(MM11, z)
    np.testing.assert_array_equal(x, np.maximum(z[1:], z[:-1]))
    assert models.moving_maxima_sequence(MM11, 1000, 5).shape == (1000,)


def test_marginal_tail_values():
    assert models.marginal_tail(MM11, 4.0) == pytest.approx(1 - math.exp(-1.0), rel=1e-14)
    assert models.marginal_tail(MM11, 1e300) < 1e-100
    iid = MovingMaximaModel(0.7, (1.0,))
    assert models.marginal_tail(iid, 2.0) == pytest.approx(1 - math.exp(-(2.0**-0.7)), rel=1e-14)
    with pytest.raises(DomainError):
        models.marginal_tail(MM11, 0.0)


def test_marginal_tail_matches_simulation():
    z = models.frechet_sample(0.5, 1_000_001, 17)
    x = models.moving_maxima_from_innovations(MM11, z)
    for level in (1.0, 4.0, 10.0):
        p = models.marginal_tail(MM11, level)
        se = math.sqrt(p * (1 - p) / x.size)
        assert abs(np.mean(x > level) - p) <= 3 * se
    # closed form 1 - exp(-2 / sqrt(10)) = 0.468714...
    assert models.marginal_tail(MM11, 10.0) == pytest.approx(0.4687143908670322, rel=1e-12)
    assert abs(np.mean(x > 10.0) - 0.4690) <= 0.002


def test_norming_closed_forms():
    a = models.norming(MM11, 10_000, NormingMode.INNOVATION)
    assert a == pytest.approx((1 / -math.log1p(-1e-4)) ** 2, rel=1e-14)
    assert a == pytest.approx(9.999e7, rel=1e-4)
    ratio = models.norming(MM11, 10_000, "marginal") / a
    assert ratio == pytest.approx(4.0, rel=1e-14)
    for n in (2, 10, 10_000, 10**9):
        an = models.norming(MM11, n)
        assert n * models.marginal_tail(MM11, an) == pytest.approx(1.0, rel=1e-12)
    with pytest.raises(DomainError):
        models.norming(MM11, 1)
    with pytest.raises(DomainError):
        models.norming(MM11, 10, "bogus")


def test_partial_processes_examples():
    L = models.partial_processes([1.0, 2.0, 3.0], 1.0)
    np.testing.assert_array_equal(L.eval(1.0), [6.0, 3.0])
    neg = models.partial_processes([-1.0], 1.0)
    assert np.all(neg.levels[:, 1] == 0.0)
    with pytest.raises(DomainError):
        models.partial_processes([], 1.0)


def test_partial_processes_eval_at_one_is_normalized_sum():
    x = models.moving_maxima_sequence(MM11, 500, 2)
    L = models.partial_processes(x, 7.0)
    assert L.eval(1.0)[0] == pytest.approx(np.sum(x) / 7.0, rel=1e-14)
    assert L.component(0).is_nondecreasing()


def test_truncated_process_examples():
    T = models.truncated_process([3.0, 0.1, 5.0], 1.0, 1.0)
    np.testing.assert_array_equal(T.levels[:, 0], [0.0, 3.0, 3.0, 8.0])
    big = models.truncated_process([3.0, 0.1, 5.0], 1.0, 100.0)
    assert np.all(big.levels[:, 0] == 0.0)
    small = models.truncated_process([3.0, 0.1, 5.0], 1.0, 1e-12)
    assert small == models.partial_processes([3.0, 0.1, 5.0], 1.0)


def test_gn_path():
    g = models.gn_path([1.0, 2.0], 1.0)
    np.testing.assert_array_equal(g.levels[:, 0], [0.0, -1.0, -1.0])
    x = models.moving_maxima_sequence(MM11, 100, 9)
    L = models.partial_processes(x, 3.0)
    ts = np.linspace(0, 1, 301)
    np.testing.assert_array_equal(models.gn_path(x, 3.0).eval(ts)[:, 0], L.eval(ts)[:, 0] - 2 * L.eval(ts)[:, 1])


def test_stationarity_smoke():
    reps = 100_000
    z = models.frechet_from_uniform(stream(1, 0).random((reps, 6)), 0.5)
    x = models.moving_maxima_from_innovations(MM11, z)
    assert stats.ks_2samp(x[:, 0], x[:, -1]).statistic <= 0.01


def test_m_dependence_tail_ratio():
    model = MovingMaximaModel(0.5, (1.0, 1.0))
    x = models.moving_maxima_sequence(model, 1_000_002, 21)
    q = np.quantile(x, 0.9)
    e = x > q
    lag = model.order + 1
    joint = np.mean(e[:-lag] & e[lag:])
    assert joint / np.mean(e) ** 2 == pytest.approx(1.0, rel=0.10)
