import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from optpredict import (
    CostWeights,
    GbmParams,
    InsufficientDataError,
    InvalidArgumentError,
    TimeSeries,
    log_returns,
    simulate_gbm,
)
from optpredict.series import BrownianIncrement


def test_time_series_rejects_nonpositive_and_bad_dt():
    with pytest.raises(InvalidArgumentError, match="index 1"):
        TimeSeries([1.0, 0.0, 2.0])
    with pytest.raises(InvalidArgumentError):
        TimeSeries([1.0, -3.0])
    with pytest.raises(InvalidArgumentError):
        TimeSeries([1.0], dt=0)
    with pytest.raises(InvalidArgumentError):
        TimeSeries([])


def test_time_series_is_immutable():
    s = TimeSeries([1.0, 2.0])
    with pytest.raises(ValueError):
        s.values[0] = 5.0


def test_param_and_weight_validation():
    with pytest.raises(InvalidArgumentError):
        GbmParams(0.1, -0.2)
    with pytest.raises(InvalidArgumentError):
        GbmParams(0.1, 0.2, window=2)
    with pytest.raises(InvalidArgumentError):
        CostWeights(0.0, 1.0)
    w = CostWeights(2.0, 3.0)
    assert w.omega == 1.5
    assert w.fractile == 1.5 / 2.5
    assert CostWeights.from_omega(1.15).p_over == 1.0


def test_brownian_increment_needs_positive_dt():
    with pytest.raises(InvalidArgumentError):
        BrownianIncrement(0.3, dt=0.0)


def test_simulate_zero_noise():
    s = simulate_gbm(1.0, GbmParams(0.0, 0.0), 5, 1.0, seed=1)
    assert list(s.values) == [1.0] * 6


def test_simulate_deterministic_growth():
    s = simulate_gbm(1.0, GbmParams(math.log(2), 0.0), 3, 1.0, seed=1)
    np.testing.assert_allclose(s.values, [1, 2, 4, 8], rtol=1e-14)


@pytest.mark.parametrize("mu,dt", [(0.07, 1.0), (-0.2, 0.25), (0.5, 3.0)])
def test_simulate_sigma_zero_is_exact_exponential(mu, dt):
    s = simulate_gbm(3.0, GbmParams(mu, 0.0), 50, dt, seed=9)
    expected = 3.0 * np.exp(mu * dt * np.arange(51))
    np.testing.assert_allclose(s.values, expected, rtol=1e-13)


def test_simulate_is_seeded_and_positive():
    p = GbmParams(0.01, 0.8)
    a = simulate_gbm(10.0, p, 500, 1.0, seed=3)
    b = simulate_gbm(10.0, p, 500, 1.0, seed=3)
    c = simulate_gbm(10.0, p, 500, 1.0, seed=4)
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)
    assert len(a) == 501 and a[0] == 10.0
    assert np.all(a.values > 0)


@pytest.mark.parametrize("bad", [dict(s0=0.0), dict(s0=-1.0), dict(dt=0.0), dict(steps=0)])
def test_simulate_rejects_bad_arguments(bad):
    kwargs = dict(s0=1.0, params=GbmParams(0, 0.1), steps=3, dt=1.0, seed=0)
    kwargs.update(bad)
    with pytest.raises(InvalidArgumentError):
        simulate_gbm(**kwargs)


def test_simulated_log_return_mean_matches_drift():
    s = simulate_gbm(100.0, GbmParams(0.05, 0.2), 100_000, 1.0, seed=11)
    r = log_returns(s)
    assert abs(r.mean() - 0.03) < 3 * 0.2 / math.sqrt(100_000)


@pytest.mark.parametrize("seed", [0, 1, 2])
@pytest.mark.parametrize("mu,sigma,dt", [(0.05, 0.2, 1.0), (-0.3, 1.1, 0.1)])
def test_simulated_log_returns_pass_ks(seed, mu, sigma, dt):
    s = simulate_gbm(50.0, GbmParams(mu, sigma), 10_000, dt, seed=seed)
    r = log_returns(s)
    z = (r - (mu - 0.5 * sigma**2) * dt) / (sigma * math.sqrt(dt))
    assert stats.kstest(z, "norm").pvalue > 0.001


def test_log_returns_examples():
    np.testing.assert_allclose(log_returns(TimeSeries([1, 2, 4, 8])), [math.log(2)] * 3, rtol=1e-15)
    assert list(log_returns(TimeSeries([5, 5, 5]))) == [0.0, 0.0]
    assert log_returns(TimeSeries([100, 90]))[0] == pytest.approx(-0.10536051565782628, abs=1e-14)
    with pytest.raises(InsufficientDataError):
        log_returns(TimeSeries([3.0]))


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(min_value=1e-3, max_value=1e6), min_size=2, max_size=60))
def test_log_return_round_trip(values):
    s = TimeSeries(values)
    rebuilt = s[0] * np.exp(np.concatenate(([0.0], np.cumsum(log_returns(s)))))
    np.testing.assert_allclose(rebuilt, s.values, rtol=1e-12)
