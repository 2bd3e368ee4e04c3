import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from statsmodels.tsa.stattools import acf as sm_acf, pacf as sm_pacf

from condhill.diagnostics import acf, acf_pacf, pacf, pareto_qq, rank_to_uniform, split_signed
from condhill.errors import DegenerateSeries, EmptySide, NonPositiveResponse


def test_rank_examples():
    assert np.array_equal(rank_to_uniform([5, 1, 9]), [0.5, 0.25, 0.75])
    assert np.array_equal(rank_to_uniform([3, 3, 3]), [0.5, 0.5, 0.5])


@given(st.lists(st.integers(-300, 300), min_size=1, max_size=50))
def test_rank_properties(xs):
    x = np.array(xs, dtype=float)
    u = rank_to_uniform(x)
    assert np.all((u > 0) & (u < 1))
    assert np.array_equal(u, rank_to_uniform(np.exp(x)))
    if np.unique(x).size == x.size:
        assert np.allclose(np.sort(u), np.arange(1, x.size + 1) / (x.size + 1), rtol=0, atol=0)


def test_split_examples():
    with pytest.raises(EmptySide):
        split_signed([0.1, 0.2, 0.3], [1.0, -2.0, 3.0])
    with pytest.raises(EmptySide):
        split_signed([0.1, 0.2, 0.3], [1.0, 2.0, 3.0])
    pos, neg = split_signed([1, 2, 3, 4, 5, 6], [1.0, -2.0, 0.0, 3.0, -0.5, 0.0])
    assert np.array_equal(pos.y, [1.0, 3.0]) and np.array_equal(pos.x, [1, 4])
    assert np.array_equal(neg.y, [2.0, 0.5]) and np.array_equal(neg.x, [2, 5])


@settings(max_examples=50)
@given(st.lists(st.sampled_from([-2.0, -1.0, 0.0, 0.5, 3.0]), min_size=4, max_size=40))
def test_split_partition(rs):
    r = np.array(rs)
    x = np.arange(r.size, dtype=float)
    try:
        pos, neg = split_signed(x, r)
    except EmptySide:
        assert (r > 0).sum() < 2 or (r < 0).sum() < 2
        return
    assert pos.n + neg.n + (r == 0).sum() == r.size
    assert np.all(neg.y > 0)


def test_qq_m_two():
    qq = pareto_qq([1.0, 2.0, 4.0, 8.0], 2)
    assert qq.theoretical.size == qq.empirical.size == 2
    assert qq.theoretical[0] > 0 and qq.empirical[0] > 0
    np.testing.assert_allclose(qq.empirical, [np.log(2), np.log(4)])
    np.testing.assert_allclose(qq.theoretical, [-np.log(2 / 3), -np.log(1 / 3)])


def test_qq_scale_invariant_and_parameter_free():
    y = np.random.default_rng(3).pareto(2.0, 500) + 1
    a, b = pareto_qq(y, 100), pareto_qq(7.5 * y, 100)
    np.testing.assert_allclose(a.empirical, b.empirical, atol=1e-12)
    assert np.array_equal(a.theoretical, pareto_qq(y[::-1] * 2 + 3, 100).theoretical)
    assert np.all(np.diff(a.theoretical) > 0) and np.all(np.diff(a.empirical) > 0)


def test_qq_slope_recovers_index():
    y = np.random.default_rng(21).uniform(size=100_000) ** -0.5
    assert abs(pareto_qq(y, 1000).slope_hint - 0.5) < 0.05


def test_qq_errors():
    with pytest.raises(ValueError):
        pareto_qq([1.0, 2.0, 3.0], 3)
    with pytest.raises(NonPositiveResponse):
        pareto_qq([-1.0, 2.0, 3.0, 4.0], 3)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_acf_pacf_match_statsmodels(seed):
    rng = np.random.default_rng(seed)
    z = np.cumsum(rng.standard_normal(400)) * 0.1 + rng.standard_normal(400)
    a, p = acf_pacf(z, 30)
    np.testing.assert_allclose(a, sm_acf(z, nlags=30, fft=False), atol=1e-12)
    np.testing.assert_allclose(p, sm_pacf(z, nlags=30, method="ldb"), atol=1e-10)


def test_acf_white_noise_band():
    n = 100_000
    a = acf(np.random.default_rng(4).standard_normal(n), 20)
    assert a[0] == 1.0
    assert np.sum(np.abs(a[1:]) < 3 / np.sqrt(n)) >= 18


def test_pacf_ar1_cutoff():
    from scipy.signal import lfilter
    z = lfilter([1.0], [1.0, -0.9], np.random.default_rng(6).standard_normal(100_000))
    _, p = acf_pacf(z, 5)
    assert p[1] == pytest.approx(0.9, abs=0.02)
    assert p[2] == pytest.approx(0.0, abs=0.02)


def test_acf_time_reversal():
    z = np.random.default_rng(8).exponential(size=300)
    np.testing.assert_allclose(acf(z, 40), acf(z[::-1], 40), atol=1e-13)


def test_acf_errors():
    with pytest.raises(DegenerateSeries):
        acf(np.ones(10), 2)
    with pytest.raises(ValueError):
        acf(np.arange(10.0), 5)


def test_pacf_lag_zero_only():
    assert np.array_equal(pacf(np.array([1.0])), [1.0])
