import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from antijam.sensing import (SensingConfig, jnr_for_miss_detection, p_false_alarm, p_miss_detection,
                             q_function, sense, sense_amplitudes, threshold_for_false_alarm)


def q_oracle(x: float) -> float:
    mpmath.mp.dps = 30
    return float(mpmath.erfc(mpmath.mpf(x) / mpmath.sqrt(2)) / 2)


def test_q_examples():
    assert q_function(0.0) == 0.5
    assert q_function(2.32) == pytest.approx(0.01017, abs=5e-6)


@given(st.floats(-8, 8))
@settings(max_examples=200)
def test_q_matches_high_precision_oracle(x):
    assert abs(q_function(x) - q_oracle(x)) <= 1e-7


@given(st.floats(-8, 8))
def test_q_reflection(x):
    assert q_function(-x) == pytest.approx(1 - q_function(x), abs=1e-12)


def test_q_vectorized():
    xs = np.array([-1.0, 0.0, 2.32])
    np.testing.assert_allclose(q_function(xs), [q_function(x) for x in xs], rtol=1e-14)


def test_probability_examples():
    assert p_false_alarm(SensingConfig(threshold_ratio=2.32)) == pytest.approx(0.01, abs=3e-4)
    assert p_false_alarm(SensingConfig(threshold_ratio=2.8117)) == pytest.approx(0.00246, abs=1e-5)
    assert p_false_alarm(SensingConfig(threshold_ratio=0.0)) == 0.5
    assert p_miss_detection(SensingConfig(threshold_ratio=2.32, jnr_db=13.35)) == pytest.approx(0.01, abs=3e-4)
    default = SensingConfig()
    assert p_miss_detection(default) == pytest.approx(0.00246, abs=1e-5)
    assert p_miss_detection(default) == pytest.approx(p_false_alarm(default), rel=2e-3)
    # threshold at the jamming amplitude
    amp = 10 ** (15 / 20)
    assert p_miss_detection(SensingConfig(threshold_ratio=amp, jnr_db=15)) == pytest.approx(0.5)


def test_inverse_helpers_round_trip():
    thr = threshold_for_false_alarm(0.01)
    assert p_false_alarm(SensingConfig(threshold_ratio=thr)) == pytest.approx(0.01, rel=1e-9)
    jnr = jnr_for_miss_detection(0.01, thr)
    assert p_miss_detection(SensingConfig(threshold_ratio=thr, jnr_db=jnr)) == pytest.approx(0.01, rel=1e-9)


def test_ideal_sensing_is_identity():
    cfg = SensingConfig(ideal=True)
    truth = np.random.default_rng(0).random((50, 12)) < 0.3
    assert np.array_equal(sense(truth, cfg, np.random.default_rng(1)), truth.astype(np.int8))
    assert p_false_alarm(cfg) == p_miss_detection(cfg) == 0.0


PAIRS = [(2.32, 13.35), (2.8117, 15.0), (1.5, 10.0), (3.0, 12.0), (2.0, 18.0)]


@pytest.mark.parametrize("thr, jnr", PAIRS)
def test_signal_level_sensing_matches_q(thr, jnr):
    cfg = SensingConfig(threshold_ratio=thr, jnr_db=jnr)
    rng = np.random.default_rng(int(thr * 100 + jnr))
    n = 10**6
    fa = sense_amplitudes(np.zeros(n, dtype=bool), cfg, rng).mean()
    md = 1 - sense_amplitudes(np.ones(n, dtype=bool), cfg, rng).mean()
    for emp, p in ((fa, p_false_alarm(cfg)), (md, p_miss_detection(cfg))):
        assert abs(emp - p) <= 3 * math.sqrt(p * (1 - p) / n)


def test_bitflip_sensing_rates():
    cfg = SensingConfig()
    rng = np.random.default_rng(9)
    n = 10**6
    flagged_busy = sense(np.ones(n, dtype=bool), cfg, rng).mean()
    flagged_free = sense(np.zeros(n, dtype=bool), cfg, rng).mean()
    p_md, p_fa = p_miss_detection(cfg), p_false_alarm(cfg)
    assert abs(flagged_busy - (1 - p_md)) <= 3 * math.sqrt(p_md * (1 - p_md) / n)
    assert abs(flagged_free - p_fa) <= 3 * math.sqrt(p_fa * (1 - p_fa) / n)


def test_monotone_in_threshold():
    grid = np.linspace(0.0, 6.0, 61)
    fa = [p_false_alarm(SensingConfig(threshold_ratio=g)) for g in grid]
    md = [p_miss_detection(SensingConfig(threshold_ratio=g)) for g in grid]
    assert np.all(np.diff(fa) < 0)
    assert np.all(np.diff(md) > 0)


def test_rejects_bad_config():
    with pytest.raises(ValueError):
        SensingConfig(threshold_ratio=-1.0)
    with pytest.raises(ValueError):
        SensingConfig(noise_std=0.0)
