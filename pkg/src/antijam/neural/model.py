"""GRU sequence model with per-step heads, training loop, and checkpoints."""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .gru import GruParams, gru_backward, gru_forward
from .layers import DenseHead, loss, loss_grad_logits
from .optim import Adam, clip_by_global_norm

log = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1

LOSS_FOR_ACTIVATION = {"softmax": "cross_entropy", "sigmoid": "binary_cross_entropy"}


class TrainingDiverged(RuntimeError):
    pass


@dataclass
class TrainConfig:
    sequence_length: int = 20
    hidden_dim: int = 64
    learning_rate: float = 3e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    epochs: int = 20
    batch_size: int = 64
    seed: int = 0
    clip_norm: float = 5.0

    def __post_init__(self):
        if self.sequence_length < 1:
            raise ValueError("sequence_length must be >= 1")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")


class GruModel:
    """One GRU layer with a dense head attached to every hidden state."""

    def __init__(self, gru: GruParams, head: DenseHead):
        if head.W.shape[1] != gru.hidden_dim:
            raise ValueError("head input does not match GRU hidden size")
        self.gru = gru
        self.head = head

    @classmethod
    def init(cls, input_dim: int, hidden_dim: int, out_dim: int, activation: str,
             rng: np.random.Generator, tie_gates: bool = False) -> "GruModel":
        gru = GruParams.init(input_dim, hidden_dim, rng, tie_gates=tie_gates)
        return cls(gru, DenseHead.init(hidden_dim, out_dim, activation, rng))

    @property
    def loss_kind(self) -> str:
        return LOSS_FOR_ACTIVATION[self.head.activation]

    @property
    def input_dim(self) -> int:
        return self.gru.input_dim

    def params(self) -> dict[str, np.ndarray]:
        out = {f"gru.{k}": v for k, v in self.gru.arrays().items()}
        out.update({f"head.{k}": v for k, v in self.head.arrays().items()})
        return out

    def forward(self, inputs: np.ndarray) -> np.ndarray:
        """Per-step head outputs, (T, O) or (B, T, O)."""
        hidden = gru_forward(self.gru, inputs)
        return self.head.activate(self.head.logits(hidden))

    def predict_last(self, inputs: np.ndarray) -> np.ndarray:
        return self.forward(inputs)[..., -1, :]

    def loss(self, inputs: np.ndarray, targets) -> float:
        return loss(self.forward(inputs), targets, self.loss_kind)

    def loss_and_grads(self, inputs: np.ndarray, targets) -> tuple[float, dict[str, np.ndarray]]:
        """Mean per-step loss and its exact gradient for a batch."""
        x = np.asarray(inputs, dtype=float)
        if x.ndim == 2:
            x = x[None]
            targets = np.asarray(targets)[None]
        hidden, cache = gru_forward(self.gru, x, return_cache=True)
        logits = self.head.logits(hidden)
        out = self.head.activate(logits)
        value = loss(out, targets, self.loss_kind)
        d_logits = loss_grad_logits(out, targets, self.loss_kind)
        B, T, H = hidden.shape
        dl = d_logits.reshape(B * T, -1)
        grads = {
            "head.W": dl.T @ hidden.reshape(B * T, H),
            "head.b": dl.sum(0),
        }
        d_hidden = d_logits @ self.head.W
        for k, g in gru_backward(self.gru, cache, d_hidden).items():
            if k != "d0":
                grads[f"gru.{k}"] = g
        return value, grads

    def save(self, path, train_config: TrainConfig | None = None, extra: dict | None = None):
        meta = {
            "format": "antijam-gru",
            "version": CHECKPOINT_VERSION,
            "input_dim": self.gru.input_dim,
            "hidden_dim": self.gru.hidden_dim,
            "out_dim": self.head.out_dim,
            "activation": self.head.activation,
            "tie_gates": self.gru.tie_gates,
            "train_config": asdict(train_config) if train_config else None,
            "extra": extra or {},
        }
        arrays = {k: np.ascontiguousarray(v, dtype="<f8") for k, v in self.params().items()}
        with open(path, "wb") as fh:
            np.savez(fh, __meta__=np.array(json.dumps(meta, sort_keys=True)), **arrays)

    @classmethod
    def load(cls, path) -> tuple["GruModel", dict]:
        with np.load(path, allow_pickle=False) as data:
            meta = json.loads(str(data["__meta__"]))
            if meta.get("format") != "antijam-gru":
                raise ValueError(f"{path} is not a GRU checkpoint")
            if meta["version"] > CHECKPOINT_VERSION:
                raise ValueError(f"checkpoint version {meta['version']} is newer than supported")
            gru = GruParams.zeros(meta["input_dim"], meta["hidden_dim"])
            gru.tie_gates = meta["tie_gates"]
            for name in gru.arrays():
                setattr(gru, name, data[f"gru.{name}"].copy())
            if gru.tie_gates:
                gru.U_r = gru.U_z
            head = DenseHead(data["head.W"].copy(), data["head.b"].copy(), meta["activation"])
        gru.check()
        return cls(gru, head), meta


def bptt(model: GruModel, inputs: np.ndarray, targets) -> dict[str, np.ndarray]:
    return model.loss_and_grads(inputs, targets)[1]


@dataclass
class TrainResult:
    loss_curve: list[float] = field(default_factory=list)
    accuracy_curve: list[float] = field(default_factory=list)


def step_accuracy(model: GruModel, inputs: np.ndarray, targets) -> float:
    """Last-step accuracy: argmax match for softmax, per-bit match for sigmoid."""
    out = model.forward(inputs)[:, -1]
    t = np.asarray(targets)[:, -1]
    if model.head.activation == "softmax":
        if t.ndim > 1:
            t = t.argmax(-1)
        return float((out.argmax(-1) == t).mean())
    return float(((out >= 0.5) == (t >= 0.5)).mean())


def train(inputs: np.ndarray, targets, model: GruModel, config: TrainConfig,
          progress: bool = False) -> TrainResult:
    """Mini-batch Adam on per-step loss.  Deterministic given ``config.seed``."""
    inputs = np.asarray(inputs, dtype=float)
    targets = np.asarray(targets)
    if inputs.ndim != 3 or len(inputs) != len(targets):
        raise ValueError("inputs must be (windows, T, features) aligned with targets")
    rng = np.random.default_rng(config.seed)
    opt = Adam(config.learning_rate, config.beta1, config.beta2, config.eps)
    params = model.params()
    result = TrainResult()
    n = len(inputs)
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            value, grads = model.loss_and_grads(inputs[idx], targets[idx])
            if not np.isfinite(value):
                raise TrainingDiverged(f"loss became {value} at epoch {epoch}, batch starting {start}")
            clip_by_global_norm(grads, config.clip_norm)
            opt.step(params, grads)
            total += value * len(idx)
        result.loss_curve.append(total / n)
        probe = order[: min(n, 2048)]
        result.accuracy_curve.append(step_accuracy(model, inputs[probe], targets[probe]))
        if progress:
            log.info("epoch %d loss %.5f acc %.4f", epoch, result.loss_curve[-1], result.accuracy_curve[-1])
    return result
