"""Stateful jammer policies: random, sweeping, reactive, combat.

Each step returns the set of channels the jammer occupies in the current
slot.  States are plain mutable data owned by one episode.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

KINDS = ("random", "sweeping", "reactive", "combat")

DEFAULT_DWELL = 10

# Jamming-ratio presets: channels jammed by each jammer type.
JAMMING_PRESETS = {
    "jr30": {"sweeping": 2, "reactive": 1, "random": 1, "combat": 2},
    "jr40": {"sweeping": 3, "reactive": 1, "random": 2, "combat": 2},
    "jr50": {"sweeping": 4, "reactive": 1, "random": 2, "combat": 3},
    "jr60": {"sweeping": 4, "reactive": 1, "random": 3, "combat": 4},
    "jr70": {"sweeping": 5, "reactive": 1, "random": 3, "combat": 5},
}
_PRESET_ALIASES = {f"{k[2:]}%": k for k in JAMMING_PRESETS}


@dataclass
class JammerState:
    kind: str
    width: int = 1
    dwell_length: int = DEFAULT_DWELL
    sweep_position: int = 0
    dwell_remaining: int = 0
    current: frozenset = field(default_factory=frozenset)
    memory: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown jammer kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "reactive" and self.width != 1:
            raise ValueError("reactive jammers jam exactly one channel (width=1)")
        if self.width < 1:
            raise ValueError("width must be >= 1")
        if self.dwell_length < 1:
            raise ValueError("dwell_length must be >= 1")

    def copy(self) -> "JammerState":
        return copy.copy(self)


def make_jammer(kind: str, width: int, num_channels: int, dwell: int = DEFAULT_DWELL,
                sweep_position: int = 0) -> JammerState:
    if width > num_channels:
        raise ValueError(f"width {width} exceeds number of channels {num_channels}")
    if not 0 <= sweep_position < num_channels:
        raise ValueError("sweep_position must lie in [0, L)")
    return JammerState(kind=kind, width=width, dwell_length=dwell, sweep_position=sweep_position)


def resolve_preset(name: str) -> str:
    key = _PRESET_ALIASES.get(name, name)
    if key not in JAMMING_PRESETS:
        raise KeyError(f"unknown jamming preset {name!r}; expected one of {sorted(JAMMING_PRESETS)}")
    return key


def preset_jammers(name: str, num_channels: int, dwell: int = DEFAULT_DWELL,
                   rng: Optional[np.random.Generator] = None) -> list[JammerState]:
    """One jammer per type with the preset widths, ordered as in :data:`KINDS`.

    A given ``rng`` randomizes the sweep starting phase.
    """
    widths = JAMMING_PRESETS[resolve_preset(name)]
    pos = int(rng.integers(num_channels)) if rng is not None else 0
    return [make_jammer(kind, widths[kind], num_channels, dwell=dwell, sweep_position=pos)
            for kind in KINDS]


def nominal_jammed(name: str) -> int:
    """Total jammer width of a preset (an upper bound on the union)."""
    return sum(JAMMING_PRESETS[resolve_preset(name)].values())


def random_step(state: JammerState, num_channels: int, rng: np.random.Generator) -> frozenset:
    chosen = rng.choice(num_channels, size=state.width, replace=False)
    state.current = frozenset(int(c) for c in chosen)
    return state.current


def sweeping_step(state: JammerState, num_channels: int) -> frozenset:
    p, w = state.sweep_position, state.width
    state.current = frozenset((p + i) % num_channels for i in range(w))
    state.sweep_position = (p + w) % num_channels
    return state.current


def reactive_step(state: JammerState, observed_active: Iterable[int],
                  rng: np.random.Generator) -> frozenset:
    """Jam what was active one slot ago; one channel picked uniformly if several."""
    observed = sorted(set(int(c) for c in observed_active))
    state.memory = frozenset(observed)
    if not observed:
        state.current = frozenset()
    elif len(observed) <= state.width:
        state.current = frozenset(observed)
    else:
        picks = rng.choice(len(observed), size=state.width, replace=False)
        state.current = frozenset(observed[i] for i in picks)
    return state.current


def combat_step(state: JammerState, num_channels: int, rng: np.random.Generator) -> frozenset:
    if state.dwell_remaining > 0 and state.current:
        state.dwell_remaining -= 1
        return state.current
    chosen = rng.choice(num_channels, size=state.width, replace=False)
    state.current = frozenset(int(c) for c in chosen)
    state.dwell_remaining = state.dwell_length - 1
    return state.current


def step(state: JammerState, num_channels: int, observed_active, rng: np.random.Generator) -> frozenset:
    if state.kind == "random":
        return random_step(state, num_channels, rng)
    if state.kind == "sweeping":
        return sweeping_step(state, num_channels)
    if state.kind == "reactive":
        return reactive_step(state, observed_active, rng)
    return combat_step(state, num_channels, rng)


def compose(states: list[JammerState], observed_active, num_channels: int,
            rng: np.random.Generator) -> tuple[list[frozenset], frozenset]:
    """Advance every jammer one slot; returns per-jammer sets and their union."""
    if not states:
        raise ValueError("compose needs at least one jammer")
    per_jammer = [step(s, num_channels, observed_active, rng) for s in states]
    return per_jammer, frozenset().union(*per_jammer)


def occupancy(channels: Iterable[int], num_channels: int) -> np.ndarray:
    vec = np.zeros(num_channels, dtype=np.int8)
    vec[list(channels)] = 1
    return vec
