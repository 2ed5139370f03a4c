import math

import numpy as np
import pytest

from antijam import jammers as jam
from antijam.dql import DqlAgent, DqlConfig, ReplayBuffer, _run_online, run_dql_sc1, run_dql_sc2
from antijam.sc1 import Sc1Config
from antijam.sc2 import Sc2Config
from antijam.sensing import SensingConfig
from antijam.spectrum import FadingModel, NetworkConfig, SlotEngine


def test_config_validation():
    with pytest.raises(ValueError):
        DqlConfig(gamma=1.0)
    with pytest.raises(ValueError):
        DqlConfig(epsilon_end=1.5)


def test_full_exploration_is_uniform():
    agent = DqlAgent(12, DqlConfig(), np.random.default_rng(0))
    assert agent.epsilon == 1.0
    n = 10**5
    counts = np.bincount([agent.act(np.zeros(60)) for _ in range(n)], minlength=12)
    p = 1 / 12
    assert np.all(np.abs(counts / n - p) <= 3 * math.sqrt(p * (1 - p) / n))


def test_greedy_action_is_deterministic():
    agent = DqlAgent(8, DqlConfig(epsilon_start=0.0, epsilon_end=0.0), np.random.default_rng(1))
    s = np.random.default_rng(2).random(40)
    acts = {agent.act(s) for _ in range(50)}
    assert acts == {int(np.argmax(agent.q_values(s)))}


def test_same_seed_same_action_stream():
    def stream():
        rng = np.random.default_rng(3)
        agent = DqlAgent(6, DqlConfig(decay_steps=50, batch_size=4), rng)
        out = []
        s = np.zeros(30)
        for t in range(120):
            a = agent.act(s)
            s2 = rng.random(30)
            agent.observe(s, a, float(a % 2), s2)
            agent.learn()
            out.append(a)
            s = s2
        return out

    assert stream() == stream()


def test_learn_is_noop_until_batch_available():
    agent = DqlAgent(4, DqlConfig(batch_size=8), np.random.default_rng(0))
    before = {k: v.copy() for k, v in agent.q.params.items()}
    for _ in range(7):
        agent.observe(np.zeros(20), 0, 1.0, np.zeros(20))
        assert agent.learn() is None
    assert all(np.array_equal(before[k], agent.q.params[k]) for k in before)
    agent.observe(np.zeros(20), 0, 1.0, np.zeros(20))
    assert agent.learn() is not None


def test_replay_buffer_is_a_ring():
    buf = ReplayBuffer(3, 2)
    for i in range(5):
        buf.add(np.full(2, i), i, float(i), np.full(2, i + 1))
    assert len(buf) == 3 and sorted(buf.actions.tolist()) == [2, 3, 4]


def test_bandit_limit_with_zero_discount():
    rng = np.random.default_rng(4)
    agent = DqlAgent(4, DqlConfig(gamma=0.0, hidden=(16,), learning_rate=1e-2), rng)
    s = np.ones(20)
    for _ in range(600):
        agent.observe(s, 0, 1.0, s)
        agent.learn()
    assert abs(agent.q_values(s)[0] - 1.0) <= 0.05


def test_epsilon_decays_linearly():
    agent = DqlAgent(4, DqlConfig(decay_steps=10), np.random.default_rng(0))
    for _ in range(5):
        agent.observe(np.zeros(20), 0, 0.0, np.zeros(20))
    assert agent.epsilon == pytest.approx(1.0 + 0.5 * (0.05 - 1.0))
    for _ in range(20):
        agent.observe(np.zeros(20), 0, 0.0, np.zeros(20))
    assert agent.epsilon == pytest.approx(0.05)


def _static_engine(L, slots, rng):
    static = jam.make_jammer("combat", 1, L, dwell=slots + 1)
    return SlotEngine(NetworkConfig(L, 1, 1), FadingModel(), [static], SensingConfig(ideal=True), rng)


def test_avoids_a_static_jammed_channel():
    L, slots = 12, 1500
    rng = np.random.default_rng(5)
    cfg = DqlConfig(epsilon_end=0.0, decay_steps=slots // 2)
    agent = DqlAgent(L, cfg, rng)
    trace = _run_online([agent], _static_engine(L, slots, rng), slots, L, cfg.history)
    assert trace.success[slots // 2:].mean() >= (L - 1) / L - 0.02


def test_reward_equals_success_flag():
    L, slots = 8, 300
    rng = np.random.default_rng(6)
    cfg = DqlConfig(decay_steps=100)
    agent = DqlAgent(L, cfg, rng)
    engine = SlotEngine(NetworkConfig(L, 1, 1), FadingModel(), [jam.make_jammer("random", 3, L)],
                        SensingConfig(), rng)
    trace = _run_online([agent], engine, slots, L, cfg.history)
    assert np.array_equal(agent.buffer.rewards[:slots], trace.success[:, 0].astype(float))
    assert np.array_equal(agent.buffer.actions[:slots], [r.allocation[0] for r in engine.history])


def test_runners_have_matched_schema():
    t1 = run_dql_sc1("sweeping", 2, 40, Sc1Config(), np.random.default_rng(7))
    assert t1.success.shape == (40, 1) and t1.interactions == 40
    t2 = run_dql_sc2("jr30", 3, 30, True, Sc2Config(), np.random.default_rng(8))
    assert t2.success.shape == t2.rates.shape == (30, 3) and t2.interactions == 90
    assert np.all(t2.rates[~t2.success] == 0)
