"""Multi-jammer scenario: next-slot occupancy forecasting and allocation.

Each user keeps rows of ``2L`` bits (own one-hot channel, sensed occupied
channels).  A per-user GRU with a sigmoid head is trained to emit, at every
step, the occupancy of the following slot.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import jammers as jam
from .neural import GruModel, TrainConfig, TrainResult, train
from .sensing import SensingConfig
from .spectrum import FadingModel, NetworkConfig, SlotEngine

log = logging.getLogger(__name__)


@dataclass
class Sc2Config:
    num_channels: int = 20
    window: int = 20
    dwell: int = jam.DEFAULT_DWELL
    snr: float = 10.0
    fading: FadingModel = field(default_factory=FadingModel)
    sensing: SensingConfig = field(default_factory=SensingConfig)


@dataclass
class OccupancyForecast:
    probabilities: np.ndarray
    decision: np.ndarray

    @classmethod
    def from_probabilities(cls, probs: np.ndarray) -> "OccupancyForecast":
        probs = np.asarray(probs, dtype=float)
        return cls(probs, (probs >= 0.5).astype(np.int8))


def _engine(cfg: Sc2Config, preset, num_users: int, interference: bool,
            rng: np.random.Generator) -> SlotEngine:
    """``preset`` is a jamming-ratio preset name or an explicit list of jammer states."""
    L = cfg.num_channels
    if isinstance(preset, str):
        states = jam.preset_jammers(preset, L, dwell=cfg.dwell, rng=rng)
    else:
        states = [s.copy() for s in preset]
    net = NetworkConfig(L, num_users, len(states), user_power=cfg.snr, noise_power=1.0)
    return SlotEngine(net, cfg.fading, states, cfg.sensing, rng, interference=interference)


def generate_sc2_dataset(preset: str, num_users: int, slots: int, interference: bool,
                         cfg: Sc2Config, seed: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Per-user (inputs (slots-1, 2L), targets (slots-1, L)) pairs.

    Users pick channels uniformly at random.  The target of slot t is the
    sensed occupancy of slot t+1; the final slot has no target and is dropped.
    """
    if slots < cfg.window + 1:
        raise ValueError(f"need at least window+1={cfg.window + 1} slots, got {slots}")
    rng = np.random.default_rng(seed)
    L = cfg.num_channels
    engine = _engine(cfg, preset, num_users, interference, rng)
    rows = np.zeros((num_users, slots, 2 * L), dtype=np.int8)
    policy = lambda gains, eng: rng.integers(0, L, size=num_users)
    for t in range(slots):
        rec = engine.step(policy)
        rows[np.arange(num_users), t, rec.allocation] = 1
        rows[:, t, L:] = rec.sensed
    return [(rows[k, :-1].copy(), rows[k, 1:, L:].copy()) for k in range(num_users)]


def generate_sc2_episodes(preset: str, num_users: int, slots: int, interference: bool,
                          cfg: Sc2Config, seed: int, episodes: int) -> list[list[tuple[np.ndarray, np.ndarray]]]:
    """Several independent episodes (fresh jammer phases); outer list is per episode."""
    seeds = np.random.SeedSequence(seed).generate_state(episodes)
    return [generate_sc2_dataset(preset, num_users, slots, interference, cfg, int(s)) for s in seeds]


def training_windows(episodes: list[list[tuple[np.ndarray, np.ndarray]]], user: int, window: int,
                     stride: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Windows for one user, never crossing episode boundaries."""
    parts = [make_windows(*ep[user], window, stride) for ep in episodes]
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def make_windows(inputs: np.ndarray, targets: np.ndarray, window: int,
                 stride: int = 1) -> tuple[np.ndarray, np.ndarray]:
    starts = range(0, len(inputs) - window + 1, stride)
    X = np.stack([inputs[s:s + window] for s in starts]).astype(float)
    Y = np.stack([targets[s:s + window] for s in starts]).astype(float)
    return X, Y


def write_dataset(path, episodes: list[tuple[np.ndarray, np.ndarray]]):
    """One user's (inputs, targets) episodes as CSV with an ``episode`` column."""
    L = episodes[0][1].shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["episode"] + [f"u{i}" for i in range(L)] + [f"o{i}" for i in range(L)]
                   + [f"y{i}" for i in range(L)])
        for e, (inputs, targets) in enumerate(episodes):
            for x, y in zip(inputs, targets):
                w.writerow([e] + [int(v) for v in x] + [int(v) for v in y])


def read_dataset(path) -> list[tuple[np.ndarray, np.ndarray]]:
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        head = next(r)
        L = (len(head) - 1) // 3
        expected = (["episode"] + [f"u{i}" for i in range(L)] + [f"o{i}" for i in range(L)]
                    + [f"y{i}" for i in range(L)])
        if head != expected:
            raise ValueError(f"{path}: unexpected header")
        data = np.array([[int(v) for v in line] for line in r], dtype=np.int64).reshape(-1, 3 * L + 1)
    out = []
    for e in np.unique(data[:, 0]):
        block = data[data[:, 0] == e, 1:].astype(np.int8)
        out.append((block[:, :2 * L], block[:, 2 * L:]))
    return out


def forecast(model: GruModel, window: np.ndarray) -> OccupancyForecast:
    window = np.asarray(window, dtype=float)
    if window.ndim != 2 or window.shape[1] != model.input_dim:
        raise ValueError(f"window shape {window.shape} does not match model input {model.input_dim}")
    return OccupancyForecast.from_probabilities(model.predict_last(window))


def allocate(forecasts: list[OccupancyForecast], gains: np.ndarray) -> np.ndarray:
    """Each user independently takes its strongest forecast-free channel.

    Users do not coordinate, so in interference mode two users may land on
    the same channel.  A user whose forecast marks every channel busy falls
    back to its global argmax.
    """
    gains = np.atleast_2d(gains)
    out = np.empty(len(forecasts), dtype=np.int64)
    for k, fc in enumerate(forecasts):
        free = fc.decision == 0
        if not free.any():
            log.debug("user %d: forecast marks every channel busy, using global argmax", k)
            out[k] = int(np.argmax(gains[k]))
        else:
            out[k] = int(np.argmax(np.where(free, gains[k], -np.inf)))
    return out


@dataclass
class Sc2Trace:
    preset: str
    interference: bool
    success: np.ndarray  # (slots, N)
    rates: np.ndarray  # (slots, N)
    jammer_hits: np.ndarray  # (slots, groups, J): jammer occupied some user's channel
    collisions: np.ndarray  # (slots, N)
    jammed_user: np.ndarray  # (slots, N): user's channel in its group's jammed union
    fallback_count: int = 0

    @property
    def jammer_success_rate(self) -> np.ndarray:
        """Fraction of (slot, group) pairs in which each jammer hit a user."""
        return self.jammer_hits.mean(axis=(0, 1))


def run_sc2_episode(models: list[GruModel], preset: str, num_users: int, slots: int,
                    interference: bool, cfg: Sc2Config, rng: np.random.Generator,
                    policy_override=None) -> Sc2Trace:
    """Forecast-and-allocate against a preset jammer group.

    ``policy_override(t, rows, gains)`` replaces the GRU policy (used by
    baselines and oracle checks); it must return an (N,) allocation.
    """
    L = cfg.num_channels
    if policy_override is None and len(models) != num_users:
        raise ValueError("need one model per user")
    engine = _engine(cfg, preset, num_users, interference, rng)
    rows = np.zeros((num_users, slots, 2 * L))
    success = np.zeros((slots, num_users), dtype=bool)
    rates = np.zeros((slots, num_users))
    collisions = np.zeros((slots, num_users), dtype=bool)
    jammed_user = np.zeros((slots, num_users), dtype=bool)
    groups = 1 if interference else num_users
    hits = np.zeros((slots, groups, len(jam.KINDS)), dtype=bool)
    fallbacks = 0
    t_now = 0

    def policy(gains, eng):
        nonlocal fallbacks
        if policy_override is not None:
            return policy_override(t_now, rows[:, :t_now], gains)
        if t_now == 0:
            return rng.integers(0, L, size=num_users)
        lo = max(0, t_now - cfg.window)
        fcs = []
        for k, model in enumerate(models):
            fc = forecast(model, rows[k, lo:t_now])
            if fc.decision.all():
                fallbacks += 1
            fcs.append(fc)
        return allocate(fcs, gains)

    for t in range(slots):
        t_now = t
        rec = engine.step(policy)
        alloc = rec.allocation
        rows[np.arange(num_users), t, alloc] = 1.0
        rows[:, t, L:] = rec.sensed
        success[t], rates[t] = rec.success, rec.rates
        for k in range(num_users):
            g = rec.group_of(k)
            union = set().union(*rec.jammed[g]) if rec.jammed[g] else set()
            jammed_user[t, k] = int(alloc[k]) in union
            if interference:
                collisions[t, k] = int(alloc[k]) in set(np.delete(alloc, k).tolist())
        for g, per_jammer in enumerate(rec.jammed):
            users = range(num_users) if interference else [g]
            chans = {int(alloc[k]) for k in users}
            for j, s in enumerate(per_jammer):
                hits[t, g, j] = bool(chans & s)
    return Sc2Trace(preset, interference, success, rates, hits, collisions, jammed_user, fallbacks)


@dataclass
class Sc2Training:
    slots: int = 250
    episodes: int = 40
    stride: int = 2
    shared: bool = False  # True: one network fitted on every user's rows, copied per user
    train: Optional[TrainConfig] = None

    def __post_init__(self):
        if self.train is None:
            self.train = TrainConfig(epochs=30)


def fit_forecasters(episodes: list[list[tuple[np.ndarray, np.ndarray]]], cfg: Sc2Config,
                    plan: Sc2Training, progress: bool = False
                    ) -> tuple[list[GruModel], list[TrainResult]]:
    """Per-user forecasters from :func:`generate_sc2_episodes` output.

    By default each user gets a network fitted on its own trace only.
    Users are statistically exchangeable under the random-access data
    policy, so ``shared=True`` instead fits one network on the pooled
    windows and hands the same object to every user.
    """
    L = cfg.num_channels
    num_users = len(episodes[0])

    def fit(users):
        parts = [training_windows(episodes, k, cfg.window, plan.stride) for k in users]
        X = np.concatenate([p[0] for p in parts])
        Y = np.concatenate([p[1] for p in parts])
        model = GruModel.init(2 * L, plan.train.hidden_dim, L, "sigmoid",
                              np.random.default_rng(plan.train.seed))
        return model, train(X, Y, model, plan.train, progress=progress)

    if plan.shared:
        model, result = fit(range(num_users))
        return [model] * num_users, [result]
    fitted = [fit([k]) for k in range(num_users)]
    return [m for m, _ in fitted], [r for _, r in fitted]
