"""Deep Q-learning channel-selection baseline.

The agent sees the last ``history`` sensed occupancy vectors (flattened),
picks one of ``L`` channels epsilon-greedily, and is rewarded 1 for a
successful slot and 0 otherwise.  It learns online from a replay buffer
with a periodically refreshed target network.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import jammers as jam
from .neural import Adam, Mlp
from .sc1 import Sc1Config
from .sc2 import Sc2Config
from .sc2 import _engine as sc2_engine
from .spectrum import NetworkConfig, SlotEngine


@dataclass
class DqlConfig:
    history: int = 5
    hidden: tuple[int, ...] = (128, 128)
    gamma: float = 0.9
    learning_rate: float = 1e-3
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    decay_steps: int = 100  # linear decay length; runners set it to half the episode
    target_every: int = 100
    buffer_size: int = 10_000
    batch_size: int = 32

    def __post_init__(self):
        if not 0 <= self.gamma < 1:
            raise ValueError("gamma must lie in [0, 1)")
        for e in (self.epsilon_start, self.epsilon_end):
            if not 0 <= e <= 1:
                raise ValueError("epsilon must lie in [0, 1]")


class ReplayBuffer:
    def __init__(self, capacity: int, state_dim: int):
        self.capacity = capacity
        self.states = np.zeros((capacity, state_dim))
        self.actions = np.zeros(capacity, dtype=np.int64)
        self.rewards = np.zeros(capacity)
        self.next_states = np.zeros((capacity, state_dim))
        self.size = 0
        self._pos = 0

    def __len__(self) -> int:
        return self.size

    def add(self, s, a, r, s2):
        i = self._pos
        self.states[i], self.actions[i], self.rewards[i], self.next_states[i] = s, a, r, s2
        self._pos = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, n: int, rng: np.random.Generator):
        idx = rng.integers(0, self.size, size=n)
        return self.states[idx], self.actions[idx], self.rewards[idx], self.next_states[idx]


class DqlAgent:
    def __init__(self, num_channels: int, config: DqlConfig, rng: np.random.Generator):
        self.num_channels = num_channels
        self.config = config
        self.rng = rng
        self.state_dim = config.history * num_channels
        sizes = [self.state_dim, *config.hidden, num_channels]
        self.q = Mlp(sizes, rng)
        self.target = Mlp(sizes, rng)
        self.target.copy_from(self.q)
        self.opt = Adam(lr=config.learning_rate)
        self.buffer = ReplayBuffer(config.buffer_size, self.state_dim)
        self.epsilon = config.epsilon_start
        self.steps = 0
        self.updates = 0

    def q_values(self, state: np.ndarray) -> np.ndarray:
        return self.q.forward(np.atleast_2d(state))[0]

    def act(self, state: np.ndarray) -> int:
        """Epsilon-greedy; argmax ties go to the lowest index."""
        if self.rng.random() < self.epsilon:
            return int(self.rng.integers(self.num_channels))
        return int(np.argmax(self.q_values(state)))

    def observe(self, s, a, r, s2):
        self.buffer.add(s, a, r, s2)
        self.steps += 1
        c = self.config
        frac = min(1.0, self.steps / max(1, c.decay_steps))
        self.epsilon = c.epsilon_start + frac * (c.epsilon_end - c.epsilon_start)

    def learn(self) -> float | None:
        """One TD step on a replay minibatch; no-op until the buffer holds a batch."""
        c = self.config
        if len(self.buffer) < c.batch_size:
            return None
        s, a, r, s2 = self.buffer.sample(c.batch_size, self.rng)
        target = r + c.gamma * self.target.forward(s2).max(axis=1) if c.gamma > 0 else r
        q, acts = self.q.forward(s, return_cache=True)
        td = q[np.arange(len(a)), a] - target
        d_out = np.zeros_like(q)
        d_out[np.arange(len(a)), a] = td / len(a)
        grads = self.q.backward(acts, d_out)
        self.opt.step(self.q.params, grads)
        self.updates += 1
        if self.updates % c.target_every == 0:
            self.target.copy_from(self.q)
        return float(0.5 * np.mean(td ** 2))


@dataclass
class DqlTrace:
    success: np.ndarray  # (slots, N)
    rates: np.ndarray
    interactions: int
    jammer_hits: np.ndarray | None = None


def _state(history_rows: list[np.ndarray], h: int, L: int) -> np.ndarray:
    rows = history_rows[-h:]
    pad = [np.zeros(L)] * (h - len(rows))
    return np.concatenate(pad + list(rows))


def run_dql_sc1(kind: str, width: int, slots: int, cfg: Sc1Config, rng: np.random.Generator,
                dql: DqlConfig | None = None) -> DqlTrace:
    """Online DQL against a single jammer; learns from scratch within the episode."""
    L = cfg.num_channels
    dql = dql or DqlConfig(decay_steps=max(1, slots // 2))
    agent = DqlAgent(L, dql, rng)
    state_j = jam.make_jammer(kind, width, L, dwell=cfg.dwell, sweep_position=int(rng.integers(L)))
    net = NetworkConfig(L, 1, 1, user_power=cfg.snr)
    engine = SlotEngine(net, cfg.fading, [state_j], cfg.sensing, rng, interference=True)
    return _run_online([agent], engine, slots, L, dql.history)


def run_dql_sc2(preset: str, num_users: int, slots: int, interference: bool, cfg: Sc2Config,
                rng: np.random.Generator, dql: DqlConfig | None = None) -> DqlTrace:
    """One online DQL agent per user against a preset jammer group."""
    L = cfg.num_channels
    dql = dql or DqlConfig(decay_steps=max(1, slots // 2))
    agents = [DqlAgent(L, dql, rng) for _ in range(num_users)]
    engine = sc2_engine(cfg, preset, num_users, interference, rng)
    return _run_online(agents, engine, slots, L, dql.history)


def _run_online(agents: list[DqlAgent], engine: SlotEngine, slots: int, L: int, h: int) -> DqlTrace:
    n = len(agents)
    success = np.zeros((slots, n), dtype=bool)
    rates = np.zeros((slots, n))
    history: list[list[np.ndarray]] = [[] for _ in range(n)]
    for t in range(slots):
        s = [_state(history[k], h, L) for k in range(n)]
        actions = np.array([agents[k].act(s[k]) for k in range(n)])
        rec = engine.step(lambda gains, eng: actions)
        for k in range(n):
            history[k].append(rec.sensed[k].astype(float))
            s2 = _state(history[k], h, L)
            agents[k].observe(s[k], actions[k], float(rec.success[k]), s2)
            agents[k].learn()
        success[t], rates[t] = rec.success, rec.rates
    return DqlTrace(success, rates, slots * n)
