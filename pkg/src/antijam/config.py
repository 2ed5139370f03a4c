"""Experiment configuration: one YAML file fully determines a run.

Unknown keys are rejected so that typos fail loudly instead of silently
falling back to defaults.
"""

from __future__ import annotations

import copy
from dataclasses import asdict, dataclass, field, fields
from importlib import resources
from pathlib import Path
from typing import Any, Optional

import yaml

from . import jammers as jam
from .neural import TrainConfig
from .sc1 import ClassTaxonomy, Sc1Config, Sc1Training
from .sc2 import Sc2Config, Sc2Training
from .sensing import SensingConfig
from .spectrum import FadingModel

PRESETS = ("fig4", "fig5", "fig6", "fig7", "fig8", "fig9", "fig10")


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration."""


@dataclass
class NetworkBlock:
    num_channels: int = 12
    num_users: int = 1
    snr: float = 10.0  # user power over noise power, linear


@dataclass
class FadingBlock:
    shape: float = 1.0
    mean_power: float = 1.0


@dataclass
class SensingBlock:
    threshold_ratio: float = 2.8117
    jnr_db: float = 15.0
    ideal_sensing: bool = False


@dataclass
class JammerBlock:
    dwell: int = jam.DEFAULT_DWELL
    # sc1: list of [kind, width] to evaluate; sc2: jamming-ratio presets (jr30 ... jr70)
    classes: list = field(default_factory=list)
    presets: list = field(default_factory=list)


@dataclass
class TrainBlock:
    window: int = 20
    hidden: int = 64
    learning_rate: float = 6e-3
    batch_size: int = 128
    epochs: int = 20
    seed: int = 0
    slots: int = 250
    episodes: int = 8
    noisy_episodes: int = 8
    noisy_threshold_ratio: float = 1.881
    noisy_jnr_db: float = 11.51
    stride: int = 2
    shared_model: bool = False  # sc2: one network for all users


@dataclass
class EvalBlock:
    slots: int = 100
    repetitions: int = 20
    interference: bool = False
    selection_mode: str = "random"  # sc1 reaction to a detected random jammer
    methods: list = field(default_factory=lambda: ["proposed", "dql"])
    bucket: int = 10  # slot-bucket width for summary tables


@dataclass
class AnalyticBlock:
    shapes: list = field(default_factory=lambda: [1.0])
    snrs: list = field(default_factory=lambda: [10.0])
    jammed: list = field(default_factory=lambda: [0, 1, 2, 3, 4])
    mc_trials: int = 100_000


@dataclass
class ExperimentConfig:
    scenario: str = "sc1"  # sc1 | sc2 | analytic
    name: str = "run"
    seed: int = 0
    network: NetworkBlock = field(default_factory=NetworkBlock)
    fading: FadingBlock = field(default_factory=FadingBlock)
    sensing: SensingBlock = field(default_factory=SensingBlock)
    jammers: JammerBlock = field(default_factory=JammerBlock)
    train: TrainBlock = field(default_factory=TrainBlock)
    eval: EvalBlock = field(default_factory=EvalBlock)
    analytic: AnalyticBlock = field(default_factory=AnalyticBlock)

    def validate(self) -> "ExperimentConfig":
        if self.scenario not in ("sc1", "sc2", "analytic"):
            raise ConfigError(f"scenario must be sc1, sc2 or analytic, got {self.scenario!r}")
        n = self.network
        if n.num_channels < 2 or n.num_users < 1 or n.num_users > n.num_channels:
            raise ConfigError("network needs num_channels >= 2 and 1 <= num_users <= num_channels")
        if n.snr <= 0:
            raise ConfigError("network.snr must be positive")
        if self.fading.shape < 0.5 or self.fading.mean_power <= 0:
            raise ConfigError("fading needs shape >= 0.5 and mean_power > 0")
        if self.scenario == "sc1":
            if n.num_users != 1:
                raise ConfigError("sc1 is a single-user scenario")
            for item in self.jammers.classes:
                if not (isinstance(item, (list, tuple)) and len(item) == 2 and item[0] in jam.KINDS):
                    raise ConfigError(f"jammers.classes entry {item!r} is not [kind, width]")
        if self.scenario == "sc2":
            if not self.jammers.presets:
                raise ConfigError("sc2 needs at least one jammers.presets entry")
            for p in self.jammers.presets:
                try:
                    jam.resolve_preset(p)
                except KeyError as exc:
                    raise ConfigError(str(exc)) from None
            widest = max(jam.nominal_jammed(p) for p in self.jammers.presets)
            if widest > n.num_channels:
                raise ConfigError(f"presets jam up to {widest} channels but L={n.num_channels}")
        if self.eval.selection_mode not in ("random", "max_gain"):
            raise ConfigError("eval.selection_mode must be random or max_gain")
        if self.eval.slots < 1 or self.eval.repetitions < 1 or self.eval.bucket < 1:
            raise ConfigError("eval.slots, eval.repetitions and eval.bucket must be positive")
        bad = set(self.eval.methods) - {"proposed", "dql"}
        if bad:
            raise ConfigError(f"unknown eval.methods {sorted(bad)}")
        if self.train.window < 1 or self.train.epochs < 0 or self.train.slots < self.train.window + 1:
            raise ConfigError("train needs window >= 1, epochs >= 0 and slots > window")
        return self

    # -- conversions to library configs ---------------------------------
    def fading_model(self) -> FadingModel:
        return FadingModel(self.fading.shape, self.fading.mean_power)

    def sensing_config(self) -> SensingConfig:
        s = self.sensing
        return SensingConfig(threshold_ratio=s.threshold_ratio, jnr_db=s.jnr_db, ideal=s.ideal_sensing)

    def train_config(self) -> TrainConfig:
        t = self.train
        return TrainConfig(sequence_length=t.window, hidden_dim=t.hidden, learning_rate=t.learning_rate,
                           epochs=t.epochs, batch_size=t.batch_size, seed=t.seed)

    def sc1_config(self) -> Sc1Config:
        return Sc1Config(num_channels=self.network.num_channels, window=self.train.window,
                         dwell=self.jammers.dwell, snr=self.network.snr, fading=self.fading_model(),
                         sensing=self.sensing_config(), random_mode=self.eval.selection_mode)

    def sc1_training(self) -> Sc1Training:
        t = self.train
        return Sc1Training(slots=t.slots, episodes_per_class=t.episodes, stride=t.stride,
                           noisy_episodes_per_class=t.noisy_episodes,
                           noisy_sensing=SensingConfig(threshold_ratio=t.noisy_threshold_ratio,
                                                       jnr_db=t.noisy_jnr_db),
                           train=self.train_config())

    def sc2_config(self) -> Sc2Config:
        return Sc2Config(num_channels=self.network.num_channels, window=self.train.window,
                         dwell=self.jammers.dwell, snr=self.network.snr, fading=self.fading_model(),
                         sensing=self.sensing_config())

    def sc2_training(self) -> Sc2Training:
        t = self.train
        return Sc2Training(slots=t.slots, episodes=t.episodes, stride=t.stride, shared=t.shared_model,
                           train=self.train_config())

    def taxonomy(self) -> ClassTaxonomy:
        return ClassTaxonomy.default()

    def eval_classes(self) -> list[tuple[str, int]]:
        if self.jammers.classes:
            return [(str(k), int(w)) for k, w in self.jammers.classes]
        return list(self.taxonomy().classes)

    def to_dict(self) -> dict:
        return asdict(self)


def _build(cls, data: Any, where: str):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected a mapping, got {type(data).__name__}")
    known = {f.name: f for f in fields(cls)}
    unknown = set(data) - set(known)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    kwargs = {}
    for key, value in data.items():
        sub = _BLOCKS.get((cls, key))
        kwargs[key] = _build(sub, value, f"{where}.{key}") if sub else value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


_BLOCKS = {(ExperimentConfig, "network"): NetworkBlock, (ExperimentConfig, "fading"): FadingBlock,
           (ExperimentConfig, "sensing"): SensingBlock, (ExperimentConfig, "jammers"): JammerBlock,
           (ExperimentConfig, "train"): TrainBlock, (ExperimentConfig, "eval"): EvalBlock,
           (ExperimentConfig, "analytic"): AnalyticBlock}


def from_dict(data: dict) -> ExperimentConfig:
    return _build(ExperimentConfig, copy.deepcopy(data), "config").validate()


def load_config(path: Optional[str | Path] = None, preset: Optional[str] = None,
                overrides: Optional[dict] = None) -> ExperimentConfig:
    """Read a preset and/or a YAML file; the file's keys overlay the preset's."""
    data: dict = {}
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; choose from {', '.join(PRESETS)}")
        text = resources.files("antijam").joinpath("presets", f"{preset}.yaml").read_text()
        data = yaml.safe_load(text) or {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        try:
            extra = yaml.safe_load(text) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: invalid YAML: {exc}") from None
        if not isinstance(extra, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
        data = _merge(data, extra)
    if overrides:
        data = _merge(data, overrides)
    return from_dict(data)


def _merge(base: dict, extra: dict) -> dict:
    out = dict(base)
    for k, v in extra.items():
        out[k] = _merge(out[k], v) if isinstance(v, dict) and isinstance(out.get(k), dict) else v
    return out


def dump_config(cfg: ExperimentConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False)
