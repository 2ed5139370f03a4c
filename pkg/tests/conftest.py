"""Shared fixtures: trained models are expensive, so they are cached on disk.

The cache key hashes the package sources and the training settings, so
any code change retrains from scratch.  Training is deterministic, which
makes a cached checkpoint identical to a fresh one.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict
from pathlib import Path

import numpy as np
import pytest

import antijam
from antijam.neural import GruModel, TrainConfig
from antijam.sc1 import ClassTaxonomy, Sc1Config, Sc1Training, build_training_set, fit_classifier
from antijam.sc2 import Sc2Config, Sc2Training, fit_forecasters, generate_sc2_episodes

SRC = Path(antijam.__file__).parent

# criterion lines collected by test_acceptance.py, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def source_digest() -> str:
    h = hashlib.sha256()
    for p in sorted(SRC.rglob("*.py")):
        h.update(p.relative_to(SRC).as_posix().encode())
        h.update(p.read_bytes())
    return h.hexdigest()[:16]


def sc1_training() -> Sc1Training:
    return Sc1Training(slots=250, episodes_per_class=8, noisy_episodes_per_class=8, stride=2,
                       train=TrainConfig(epochs=20, learning_rate=6e-3, batch_size=128, seed=0))


def sc2_training(episodes: int = 40) -> Sc2Training:
    return Sc2Training(slots=250, episodes=episodes, stride=2,
                       train=TrainConfig(epochs=25, learning_rate=6e-3, batch_size=128, seed=0))


def _key(name: str, payload: dict) -> str:
    blob = json.dumps(payload, sort_keys=True, default=str).encode()
    return f"{name}-{source_digest()}-{hashlib.sha256(blob).hexdigest()[:12]}"


@pytest.fixture(scope="session")
def model_cache(request) -> Path:
    return Path(request.config.cache.mkdir("antijam-models"))


@pytest.fixture(scope="session")
def sc1_model(model_cache) -> GruModel:
    taxonomy, cfg, plan = ClassTaxonomy.default(), Sc1Config(), sc1_training()
    path = model_cache / (_key("sc1", {"plan": asdict(plan), "seed": 0}) + ".npz")
    if not path.exists():
        episodes = build_training_set(taxonomy, cfg, plan, seed=0)
        model, _ = fit_classifier(episodes, len(taxonomy), cfg, plan)
        model.save(path, plan.train)
    return GruModel.load(path)[0]


@pytest.fixture(scope="session")
def sc2_models(model_cache):
    """Callable (preset, num_users, interference, episodes) -> per-user models."""
    memo = {}

    def get(preset: str, num_users: int = 1, interference: bool = False, episodes: int = 40):
        key = (preset, num_users, interference, episodes)
        if key in memo:
            return memo[key]
        cfg, plan = Sc2Config(), sc2_training(episodes)
        stem = _key(f"sc2-{preset}-{num_users}-{int(interference)}", {"plan": asdict(plan), "seed": 0})
        paths = [model_cache / f"{stem}-u{k}.npz" for k in range(num_users)]
        if not all(p.exists() for p in paths):
            seed = int(np.random.SeedSequence([0, num_users, int(interference)]).generate_state(1)[0])
            eps = generate_sc2_episodes(preset, num_users, plan.slots, interference, cfg, seed, plan.episodes)
            models, _ = fit_forecasters(eps, cfg, plan)
            for m, p in zip(models, paths):
                m.save(p, plan.train)
        memo[key] = [GruModel.load(p)[0] for p in paths]
        return memo[key]

    return get


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
