"""Single-jammer scenario: policy recognition and countermeasures.

Each slot is encoded as ``2L + 1`` integers: the user's one-hot channel,
the sensed jammer occupancy, and the class label of the generating jammer
(a (policy, width) pair from a :class:`ClassTaxonomy`).
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import jammers as jam
from .neural import GruModel, TrainConfig, TrainResult, train
from .sensing import SensingConfig
from .spectrum import FadingModel, NetworkConfig, SlotEngine

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ClassTaxonomy:
    classes: tuple[tuple[str, int], ...]

    def __post_init__(self):
        if len(set(self.classes)) != len(self.classes):
            raise ValueError("duplicate (kind, width) pairs in taxonomy")
        for kind, width in self.classes:
            if kind not in jam.KINDS:
                raise ValueError(f"unknown jammer kind {kind!r}")

    @classmethod
    def default(cls, max_width: int = 4) -> "ClassTaxonomy":
        pairs = [(k, w) for k in ("random", "sweeping", "combat") for w in range(1, max_width + 1)]
        return cls(tuple(pairs + [("reactive", 1)]))

    def __len__(self) -> int:
        return len(self.classes)

    def index(self, kind: str, width: int) -> int:
        try:
            return self.classes.index((kind, width))
        except ValueError:
            raise KeyError(f"({kind}, {width}) is not in the taxonomy") from None

    def label(self, index: int) -> tuple[str, int]:
        if not 0 <= index < len(self.classes):
            raise KeyError(f"class index {index} outside [0, {len(self.classes)})")
        return self.classes[index]

    def name(self, index: int) -> str:
        kind, width = self.label(index)
        return f"{kind}-{width}"


@dataclass
class Sc1Config:
    num_channels: int = 12
    window: int = 20  # b, also the training length a
    dwell: int = jam.DEFAULT_DWELL
    snr: float = 10.0
    fading: FadingModel = field(default_factory=FadingModel)
    sensing: SensingConfig = field(default_factory=SensingConfig)
    random_mode: str = "random"  # reaction to a detected random jammer: "random" or "max_gain"
    min_history: int = 1  # rows needed before the classifier is trusted


def encode_row(user_channel: int, jammer_bits: np.ndarray, label: int, num_channels: int) -> np.ndarray:
    row = np.zeros(2 * num_channels + 1, dtype=np.int64)
    row[user_channel] = 1
    row[num_channels:2 * num_channels] = jammer_bits
    row[-1] = label
    return row


def _engine(cfg: Sc1Config, state: jam.JammerState, rng: np.random.Generator) -> SlotEngine:
    net = NetworkConfig(cfg.num_channels, 1, 1, user_power=cfg.snr, noise_power=1.0)
    return SlotEngine(net, cfg.fading, [state], cfg.sensing, rng, interference=True)


def simulate_class_episode(kind: str, width: int, label: int, slots: int, cfg: Sc1Config,
                           rng: np.random.Generator) -> np.ndarray:
    """One episode of a random-channel user against a single jammer; (slots, 2L+1)."""
    L = cfg.num_channels
    state = jam.make_jammer(kind, width, L, dwell=cfg.dwell, sweep_position=int(rng.integers(L)))
    engine = _engine(cfg, state, rng)
    rows = np.empty((slots, 2 * L + 1), dtype=np.int64)
    policy = lambda gains, eng: rng.integers(0, L, size=1)
    for t in range(slots):
        rec = engine.step(policy)
        rows[t] = encode_row(int(rec.allocation[0]), rec.sensed[0], label, L)
    return rows


def generate_sc1_dataset(slots: int, taxonomy: ClassTaxonomy, cfg: Sc1Config, seed: int,
                         episodes_per_class: int = 1) -> list[np.ndarray]:
    """Episodes for every class in the taxonomy, in class order."""
    if slots < cfg.window:
        raise ValueError(f"episode length {slots} shorter than window {cfg.window}")
    rng = np.random.default_rng(seed)
    episodes = []
    for label, (kind, width) in enumerate(taxonomy.classes):
        for _ in range(episodes_per_class):
            episodes.append(simulate_class_episode(kind, width, label, slots, cfg, rng))
    return episodes


def make_windows(episodes: list[np.ndarray], window: int, stride: int = 1,
                 num_channels: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Cut episodes into (inputs (n, a, 2L), per-step labels (n, a))."""
    xs, ys = [], []
    for ep in episodes:
        feats, labels = ep[:, :-1].astype(float), ep[:, -1]
        for start in range(0, len(ep) - window + 1, stride):
            xs.append(feats[start:start + window])
            ys.append(labels[start:start + window])
    return np.stack(xs), np.stack(ys).astype(np.int64)


def header(num_channels: int) -> list[str]:
    return ([f"u{i}" for i in range(num_channels)] + [f"j{i}" for i in range(num_channels)]
            + ["label"])


def write_dataset(path, episodes: list[np.ndarray], num_channels: int):
    """CSV, one row per slot; an ``episode`` column separates episodes."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["episode"] + header(num_channels))
        for e, ep in enumerate(episodes):
            for row in ep:
                w.writerow([e] + [int(v) for v in row])


def read_dataset(path) -> tuple[list[np.ndarray], int]:
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        head = next(r)
        L = (len(head) - 2) // 2
        if head != ["episode"] + header(L):
            raise ValueError(f"{path}: unexpected header")
        rows = np.array([[int(v) for v in line] for line in r], dtype=np.int64)
    episodes = [rows[rows[:, 0] == e, 1:] for e in np.unique(rows[:, 0])] if len(rows) else []
    return episodes, L


def classify(model: GruModel, window: np.ndarray) -> tuple[int, np.ndarray]:
    """Class index and probabilities from the final step of a (b, 2L) window."""
    window = np.asarray(window, dtype=float)
    if window.ndim != 2 or window.shape[1] != model.input_dim:
        raise ValueError(f"window shape {window.shape} does not match model input {model.input_dim}")
    probs = model.predict_last(window)
    return int(np.argmax(probs)), probs


@dataclass
class Countermeasure:
    predicted_jammed: frozenset
    selection_mode: str = "max_gain"


def _sweep_block(start: int, width: int, L: int) -> set:
    return {(start + i) % L for i in range(width)}


def infer_sweep_start(history: list[np.ndarray], width: int, L: int) -> int:
    """Most likely start of the last sweep block given the last two sensed rows."""
    last = history[-1]
    prev = history[-2] if len(history) > 1 else None
    best, best_score = 0, -np.inf
    for p in range(L):
        block = list(_sweep_block(p, width, L))
        score = last[block].sum() - (last.sum() - last[block].sum())
        if prev is not None:
            pb = list(_sweep_block(p - width, width, L))
            score += prev[pb].sum() - (prev.sum() - prev[pb].sum())
        if score > best_score:
            best, best_score = p, score
    return best


def counter(kind: str, width: int, history: list[np.ndarray], user_channel: Optional[int],
            num_channels: int, random_mode: str = "random") -> Countermeasure:
    """Predict next-slot jammed channels for a recognized jammer.

    ``history`` holds sensed jammer occupancy vectors, oldest first.
    """
    L = num_channels
    if kind == "sweeping":
        if not history:
            raise ValueError("sweeping countermeasure needs jammer history")
        start = infer_sweep_start(history, width, L)
        return Countermeasure(frozenset(_sweep_block(start + width, width, L)))
    if kind == "combat":
        if not history:
            raise ValueError("combat countermeasure needs jammer history")
        return Countermeasure(frozenset(int(c) for c in np.flatnonzero(history[-1])))
    if kind == "reactive":
        return Countermeasure(frozenset() if user_channel is None else frozenset({int(user_channel)}))
    if kind == "random":
        return Countermeasure(frozenset(), selection_mode=random_mode)
    raise KeyError(f"unknown jammer kind {kind!r}")


def select_channel(predicted_jammed, gains: np.ndarray, mode: str,
                   rng: np.random.Generator) -> int:
    """Strongest channel outside the predicted set, or a uniform pick."""
    L = len(gains)
    if mode == "random":
        return int(rng.integers(L))
    if mode != "max_gain":
        raise ValueError(f"unknown selection mode {mode!r}")
    mask = np.ones(L, dtype=bool)
    mask[list(predicted_jammed)] = False
    if not mask.any():
        log.debug("every channel predicted jammed; falling back to global argmax")
        return int(np.argmax(gains))
    masked = np.where(mask, gains, -np.inf)
    return int(np.argmax(masked))


@dataclass
class Sc1Trace:
    kind: str
    width: int
    true_class: int
    detected: np.ndarray  # classification after k+1 observed rows
    success: np.ndarray
    rates: np.ndarray
    allocation: np.ndarray

    @property
    def correct(self) -> np.ndarray:
        return self.detected == self.true_class


def run_sc1_episode(model: GruModel, taxonomy: ClassTaxonomy, kind: str, width: int, slots: int,
                    cfg: Sc1Config, rng: np.random.Generator) -> Sc1Trace:
    """Online recognition + countermeasure against one jammer.

    Before any history exists the user picks uniformly at random.  Each
    slot the classifier is re-run on up to the last ``window`` rows.
    """
    L = cfg.num_channels
    true_class = taxonomy.index(kind, width) if (kind, width) in taxonomy.classes else -1
    state = jam.make_jammer(kind, width, L, dwell=cfg.dwell, sweep_position=int(rng.integers(L)))
    engine = _engine(cfg, state, rng)
    feats = np.zeros((slots, 2 * L))
    jam_hist: list[np.ndarray] = []
    detected = np.full(slots, -1, dtype=np.int64)
    success = np.zeros(slots, dtype=bool)
    rates = np.zeros(slots)
    alloc = np.zeros(slots, dtype=np.int64)
    current: Optional[int] = None
    last_channel: Optional[int] = None

    def policy(gains, eng):
        g = gains[0]
        if current is None or len(jam_hist) < cfg.min_history:
            return [int(rng.integers(L))]
        k, w = taxonomy.label(current)
        cm = counter(k, w, jam_hist, last_channel, L, cfg.random_mode)
        return [select_channel(cm.predicted_jammed, g, cm.selection_mode, rng)]

    for t in range(slots):
        rec = engine.step(policy)
        ch = int(rec.allocation[0])
        feats[t, ch] = 1.0
        feats[t, L:] = rec.sensed[0]
        jam_hist.append(rec.sensed[0].astype(float))
        last_channel = ch
        success[t], rates[t], alloc[t] = rec.success[0], rec.rates[0], ch
        current, _ = classify(model, feats[max(0, t + 1 - cfg.window):t + 1])
        detected[t] = current
    return Sc1Trace(kind, width, true_class, detected, success, rates, alloc)


@dataclass
class Sc1Training:
    """Dataset and optimizer settings for the recognition classifier."""
    slots: int = 250
    episodes_per_class: int = 8
    stride: int = 2
    # extra episodes simulated with a noisier sensor, so rare false alarms
    # and misses in the first few rows do not flip the decision
    noisy_episodes_per_class: int = 0
    noisy_sensing: SensingConfig = field(
        default_factory=lambda: SensingConfig(threshold_ratio=2.32, jnr_db=13.35))
    train: Optional[TrainConfig] = None

    def __post_init__(self):
        if self.train is None:
            self.train = TrainConfig(epochs=15)


def build_training_set(taxonomy: ClassTaxonomy, cfg: Sc1Config, plan: Sc1Training,
                       seed: int) -> list[np.ndarray]:
    """Clean episodes followed by the noisy-sensor ones, class order within each."""
    clean_seed, noisy_seed = (int(s) for s in np.random.SeedSequence(seed).generate_state(2))
    episodes = generate_sc1_dataset(plan.slots, taxonomy, cfg, clean_seed, plan.episodes_per_class)
    if plan.noisy_episodes_per_class:
        noisy_cfg = replace(cfg, sensing=plan.noisy_sensing)
        episodes += generate_sc1_dataset(plan.slots, taxonomy, noisy_cfg, noisy_seed,
                                         plan.noisy_episodes_per_class)
    return episodes


def fit_classifier(episodes: list[np.ndarray], num_classes: int, cfg: Sc1Config, plan: Sc1Training,
                   progress: bool = False) -> tuple[GruModel, TrainResult]:
    X, Y = make_windows(episodes, cfg.window, plan.stride)
    model = GruModel.init(2 * cfg.num_channels, plan.train.hidden_dim, num_classes, "softmax",
                          np.random.default_rng(plan.train.seed))
    return model, train(X, Y, model, plan.train, progress=progress)
