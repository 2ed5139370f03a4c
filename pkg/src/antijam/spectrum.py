"""Slotted multi-channel link model: fading, rates, success accounting.

Channel indices are 0-based everywhere, including files and logs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import jammers as jam
from .sensing import SensingConfig, sense


@dataclass(frozen=True)
class NetworkConfig:
    num_channels: int
    num_users: int = 1
    num_jammers: int = 0
    user_power: float | Sequence[float] = 10.0
    noise_power: float = 1.0

    def __post_init__(self):
        if self.num_channels < 1:
            raise ValueError("num_channels must be >= 1")
        if not 1 <= self.num_users <= self.num_channels:
            raise ValueError(f"need 1 <= num_users <= num_channels, got N={self.num_users}, L={self.num_channels}")
        if self.num_jammers < 0:
            raise ValueError("num_jammers must be >= 0")
        if np.any(np.asarray(self.user_power, dtype=float) <= 0):
            raise ValueError("user_power must be > 0")
        if np.ndim(self.user_power) == 1 and len(self.user_power) != self.num_users:
            raise ValueError("per-user power list must have num_users entries")
        if not self.noise_power > 0:
            raise ValueError("noise_power must be > 0")

    def snr(self) -> np.ndarray:
        """Per-user Omega_k / delta^2, shape (N,)."""
        power = np.broadcast_to(np.asarray(self.user_power, dtype=float), (self.num_users,))
        return power / self.noise_power


@dataclass(frozen=True)
class FadingModel:
    """Nakagami-m fading; the power gain is Gamma(m, lambda/m)."""

    shape: float = 1.0
    mean_power: float = 1.0

    def __post_init__(self):
        if not self.shape >= 0.5:
            raise ValueError(f"Nakagami shape m must be >= 0.5, got {self.shape}")
        if not self.mean_power > 0:
            raise ValueError(f"mean power must be > 0, got {self.mean_power}")


def sample_gains(fading: FadingModel, size, rng: np.random.Generator) -> np.ndarray:
    """Draw i.i.d. channel power gains |h|^2 of the given shape."""
    if np.prod(size) < 1:
        raise ValueError("need at least one gain")
    return rng.gamma(fading.shape, fading.mean_power / fading.shape, size=size)


def success_indicator(user_channel: int, jammed, others=(), interference_mode: bool = True) -> bool:
    """True when the user's channel is free of jamming and (optionally) collisions.

    The published indicator labels a jamming- and collision-free channel 0,
    which would turn the sum-rate maximization upside down; here a free
    channel is True, matching the intent of the objective.
    """
    if user_channel in set(jammed):
        return False
    if interference_mode and user_channel in set(others):
        return False
    return True


def success_flags(allocation: np.ndarray, jammed_union, interference_mode: bool = True) -> np.ndarray:
    allocation = np.asarray(allocation)
    jammed_union = set(int(c) for c in jammed_union)
    flags = np.empty(len(allocation), dtype=bool)
    for k, ch in enumerate(allocation):
        others = np.delete(allocation, k) if interference_mode else ()
        flags[k] = success_indicator(int(ch), jammed_union, others, interference_mode)
    return flags


def user_rates(allocation, gains: np.ndarray, flags: np.ndarray, snr: np.ndarray) -> np.ndarray:
    """Per-user log2(1 + snr*|h|^2) on the allocated channel, zero on failure."""
    allocation = np.asarray(allocation)
    g = gains[np.arange(len(allocation)), allocation]
    return np.where(flags, np.log2(1.0 + snr * g), 0.0)


def sum_rate(allocation, gains: np.ndarray, jammed_union, config: NetworkConfig,
             interference_mode: bool = True) -> float:
    """Instantaneous network sum rate in bits/s/Hz.

    ``gains`` has shape (N, L): row k holds user k's power gain per channel.
    """
    gains = np.atleast_2d(gains)
    flags = success_flags(allocation, jammed_union, interference_mode)
    return float(user_rates(allocation, gains, flags, config.snr()).sum())


@dataclass
class SlotRecord:
    t: int
    allocation: np.ndarray
    jammed: list  # one list of per-jammer channel sets per jammer group
    jammed_union: np.ndarray
    sensed: np.ndarray
    success: np.ndarray
    rates: np.ndarray
    gains: np.ndarray = field(repr=False)

    @property
    def sum_rate(self) -> float:
        return float(self.rates.sum())

    def group_of(self, user: int) -> int:
        return 0 if len(self.jammed) == 1 else user


# policy(gains (N, L), engine) -> allocation (N,)
Policy = Callable[[np.ndarray, "SlotEngine"], np.ndarray]


class SlotEngine:
    """Steps users and jammers through consecutive slots.

    With ``interference`` all users face one jammer group and may collide
    (interference mode).  Without it, each user faces a private copy of the
    jammer group and users never collide.

    ``sensed`` rows are per user: the user's view of occupied channels,
    covering jammed channels plus, in interference mode, other users.
    """

    def __init__(self, config: NetworkConfig, fading: FadingModel, jammer_states: list,
                 sensing: SensingConfig, rng: np.random.Generator, interference: bool = True):
        self.config = config
        self.fading = fading
        self.sensing = sensing
        self.rng = rng
        self.interference = interference
        n = config.num_users
        if interference:
            self.groups = [jammer_states]
        else:
            self.groups = [jammer_states] + [[s.copy() for s in jammer_states] for _ in range(n - 1)]
        self.last_allocation: Optional[np.ndarray] = None
        self.t = 0
        self.history: list[SlotRecord] = []

    def _observed_for_group(self, g: int):
        if self.last_allocation is None:
            return []
        if self.interference:
            return sorted(set(int(c) for c in self.last_allocation))
        return [int(self.last_allocation[g])]

    def step(self, policy: Policy) -> SlotRecord:
        L, N = self.config.num_channels, self.config.num_users
        gains = sample_gains(self.fading, (N, L), self.rng)
        allocation = np.asarray(policy(gains, self), dtype=int)
        if allocation.shape != (N,):
            raise ValueError(f"policy returned allocation of shape {allocation.shape}, expected ({N},)")

        jammed_sets = []
        for g, states in enumerate(self.groups):
            if states:
                per_jammer, _ = jam.compose(states, self._observed_for_group(g), L, self.rng)
            else:
                per_jammer = []
            jammed_sets.append(per_jammer)

        sensed = np.zeros((N, L), dtype=np.int8)
        flags = np.empty(N, dtype=bool)
        busy_truth = np.zeros((N, L), dtype=bool)
        for k in range(N):
            g = 0 if self.interference else k
            union = set().union(*jammed_sets[g]) if jammed_sets[g] else set()
            others = np.delete(allocation, k) if self.interference else ()
            flags[k] = success_indicator(int(allocation[k]), union, others, self.interference)
            busy_truth[k, list(union)] = True
            if self.interference:
                busy_truth[k, others] = True
        sensed[:] = sense(busy_truth, self.sensing, self.rng)
        rates = user_rates(allocation, gains, flags, self.config.snr())

        union_all = set()
        for per_jammer in jammed_sets:
            for s in per_jammer:
                union_all |= s
        record = SlotRecord(
            t=self.t,
            allocation=allocation,
            jammed=jammed_sets,
            jammed_union=np.array(sorted(union_all), dtype=int),
            sensed=sensed,
            success=flags,
            rates=rates,
            gains=gains,
        )
        self.last_allocation = allocation
        self.t += 1
        self.history.append(record)
        return record


def step_slot(engine: SlotEngine, policy: Policy) -> SlotRecord:
    return engine.step(policy)


def random_policy(rng: np.random.Generator) -> Policy:
    """Uniformly random channel per user, independent across users."""

    def policy(gains, engine):
        return rng.integers(0, gains.shape[1], size=gains.shape[0])

    return policy
