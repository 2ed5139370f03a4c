import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from antijam import jammers as jam
from antijam.sensing import SensingConfig
from antijam.spectrum import (FadingModel, NetworkConfig, SlotEngine, sample_gains, success_flags,
                              success_indicator, sum_rate)

IDEAL = SensingConfig(ideal=True)


def fixed(choice):
    return lambda gains, eng: np.asarray(choice)


# -- configuration -----------------------------------------------------------

@pytest.mark.parametrize("kwargs", [dict(num_channels=0), dict(num_channels=3, num_users=4),
                                    dict(num_channels=3, user_power=0.0),
                                    dict(num_channels=3, noise_power=-1.0)])
def test_network_config_rejects_invalid(kwargs):
    with pytest.raises(ValueError):
        NetworkConfig(**kwargs)


@pytest.mark.parametrize("shape, mean", [(0.4, 1.0), (1.0, 0.0), (2.0, -1.0)])
def test_fading_rejects_invalid(shape, mean):
    with pytest.raises(ValueError):
        FadingModel(shape, mean)


def test_per_user_power():
    cfg = NetworkConfig(5, num_users=2, user_power=[2.0, 4.0], noise_power=2.0)
    np.testing.assert_allclose(cfg.snr(), [1.0, 2.0])


# -- gain sampler --------------------------------------------------------------

def test_rayleigh_moments():
    g = sample_gains(FadingModel(1.0, 1.0), 10**6, np.random.default_rng(1))
    assert 0.997 <= g.mean() <= 1.003
    assert 0.99 <= g.var() <= 1.01


def test_nakagami_two_variance():
    g = sample_gains(FadingModel(2.0, 1.0), 10**6, np.random.default_rng(2))
    assert g.var() == pytest.approx(0.5, rel=0.01)


def test_exponential_cdf_point():
    g = sample_gains(FadingModel(1.0, 3.0), 10**6, np.random.default_rng(3))
    assert np.mean(g <= 3.0) == pytest.approx(1 - math.exp(-1), abs=0.005)


@pytest.mark.parametrize("m", [0.5, 1.0, 2.0, 4.0])
def test_gamma_sampler_ks(m):
    lam = 1.7
    g = sample_gains(FadingModel(m, lam), 10**5, np.random.default_rng(int(m * 10)))
    d = stats.kstest(g, stats.gamma(a=m, scale=lam / m).cdf).statistic
    # asymptotic 1% critical value of the one-sample KS statistic
    assert d < 1.628 / math.sqrt(len(g))


def test_gains_nonnegative_and_shaped():
    g = sample_gains(FadingModel(0.5, 1.0), (3, 7), np.random.default_rng(0))
    assert g.shape == (3, 7) and np.all(g >= 0)


# -- success and rates ----------------------------------------------------------

def test_success_indicator_examples():
    assert success_indicator(3, {1, 2}, ()) is True
    assert success_indicator(2, {1, 2}) is False
    assert success_indicator(4, {1}, {4}, interference_mode=True) is False
    assert success_indicator(4, {1}, {4}, interference_mode=False) is True


def test_sum_rate_examples():
    cfg1 = NetworkConfig(4, 1, user_power=1.0)
    assert sum_rate([0], np.array([[1.0, 0, 0, 0]]), [], cfg1) == pytest.approx(1.0)
    assert sum_rate([0], np.array([[1.0, 0, 0, 0]]), [0], cfg1) == 0.0
    cfg2 = NetworkConfig(4, 2, user_power=1.0)
    gains = np.array([[3.0, 0, 0, 0], [0, 7.0, 0, 0]])
    assert sum_rate([0, 1], gains, [], cfg2) == pytest.approx(5.0)
    assert sum_rate([0, 1], gains, [0, 1], cfg2) == 0.0


@given(alloc=st.lists(st.integers(0, 7), min_size=1, max_size=4),
       jammed=st.sets(st.integers(0, 7)), interference=st.booleans(), seed=st.integers(0, 2**16))
@settings(max_examples=60, deadline=None)
def test_sum_rate_nonnegative_and_zero_when_all_fail(alloc, jammed, interference, seed):
    cfg = NetworkConfig(8, len(alloc))
    gains = sample_gains(FadingModel(), (len(alloc), 8), np.random.default_rng(seed))
    r = sum_rate(alloc, gains, jammed, cfg, interference)
    assert r >= 0
    if not success_flags(alloc, jammed, interference).any():
        assert r == 0.0


# -- slot engine -----------------------------------------------------------------

def test_no_jammers_always_succeeds():
    rng = np.random.default_rng(0)
    eng = SlotEngine(NetworkConfig(5, 1), FadingModel(), [], IDEAL, rng)
    for t in range(50):
        rec = eng.step(lambda g, e: rng.integers(0, 5, size=1))
        assert rec.success.all() and rec.rates[0] > 0


def test_reactive_punishes_repeated_channel():
    rng = np.random.default_rng(0)
    eng = SlotEngine(NetworkConfig(6, 1, 1), FadingModel(), [jam.make_jammer("reactive", 1, 6)], IDEAL, rng)
    first = eng.step(fixed([3]))
    second = eng.step(fixed([3]))
    assert first.success[0] and not second.success[0]
    assert second.rates[0] == 0.0


def test_sweeping_block_misses_neighbouring_user():
    rng = np.random.default_rng(0)
    state = jam.make_jammer("sweeping", 3, 12, sweep_position=2)
    eng = SlotEngine(NetworkConfig(12, 1, 1), FadingModel(), [state], IDEAL, rng)
    rec = eng.step(fixed([5]))
    assert set(rec.jammed_union) == {2, 3, 4}
    assert rec.success[0]


def test_policy_shape_checked():
    eng = SlotEngine(NetworkConfig(4, 2), FadingModel(), [], IDEAL, np.random.default_rng(0))
    with pytest.raises(ValueError):
        eng.step(fixed([1]))


def _trace(seed, interference):
    rng = np.random.default_rng(seed)
    states = jam.preset_jammers("jr50", 20, rng=rng)
    eng = SlotEngine(NetworkConfig(20, 3, 4), FadingModel(2.0), states, SensingConfig(), rng, interference)
    return [eng.step(lambda g, e: np.argmax(g, axis=1)) for _ in range(40)]


@pytest.mark.parametrize("interference", [True, False])
def test_engine_replay_is_bitwise_identical(interference):
    a, b = _trace(7, interference), _trace(7, interference)
    for x, y in zip(a, b):
        assert np.array_equal(x.sensed, y.sensed)
        assert np.array_equal(x.allocation, y.allocation)
        assert np.array_equal(x.rates, y.rates)
        assert x.jammed == y.jammed


def test_random_user_vs_static_jamming_str():
    L, k, slots = 12, 3, 10**5
    rng = np.random.default_rng(11)
    static = jam.make_jammer("combat", k, L, dwell=slots + 1)
    eng = SlotEngine(NetworkConfig(L, 1, 1), FadingModel(), [static], IDEAL, rng)
    picks = rng.integers(0, L, size=slots)
    ok = np.array([eng.step(fixed([picks[t]])).success[0] for t in range(slots)])
    p = (L - k) / L
    assert abs(ok.mean() - p) <= 3 * math.sqrt(p * (1 - p) / slots)


def test_rate_zero_whenever_failed():
    for rec in _trace(3, True):
        assert np.all(rec.rates[~rec.success] == 0)
        assert np.all(rec.rates[rec.success] > 0)


def test_no_interference_users_never_collide():
    rng = np.random.default_rng(0)
    eng = SlotEngine(NetworkConfig(6, 3), FadingModel(), [], IDEAL, rng, interference=False)
    assert eng.step(fixed([2, 2, 2])).success.all()
    eng = SlotEngine(NetworkConfig(6, 3), FadingModel(), [], IDEAL, rng, interference=True)
    assert not eng.step(fixed([2, 2, 4])).success[:2].any()
