"""Dense heads, losses, and a small ReLU multilayer perceptron."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gru import sigmoid

LOG_FLOOR = 1e-12


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


@dataclass
class DenseHead:
    """Affine map followed by softmax (classes) or sigmoid (independent bits)."""

    W: np.ndarray  # (out, hidden)
    b: np.ndarray
    activation: str = "softmax"

    def __post_init__(self):
        if self.activation not in ("softmax", "sigmoid"):
            raise ValueError(f"unknown activation {self.activation!r}")

    @classmethod
    def init(cls, hidden_dim: int, out_dim: int, activation: str,
             rng: np.random.Generator) -> "DenseHead":
        bound = np.sqrt(1.0 / hidden_dim)
        return cls(rng.uniform(-bound, bound, size=(out_dim, hidden_dim)), np.zeros(out_dim), activation)

    @property
    def out_dim(self) -> int:
        return self.W.shape[0]

    def logits(self, hidden: np.ndarray) -> np.ndarray:
        return hidden @ self.W.T + self.b

    def activate(self, logits: np.ndarray) -> np.ndarray:
        return softmax(logits) if self.activation == "softmax" else sigmoid(logits)

    def arrays(self) -> dict[str, np.ndarray]:
        return {"W": self.W, "b": self.b}


def head_forward(head: DenseHead, hidden: np.ndarray) -> np.ndarray:
    if hidden.shape[-1] != head.W.shape[1]:
        raise ValueError(f"hidden dim {hidden.shape[-1]} does not match head input {head.W.shape[1]}")
    return head.activate(head.logits(hidden))


def _one_hot_targets(targets, num_classes: int) -> np.ndarray:
    targets = np.asarray(targets)
    if np.issubdtype(targets.dtype, np.integer):
        return np.eye(num_classes)[targets]
    return targets.astype(float)


def loss(outputs: np.ndarray, targets, kind: str) -> float:
    """Mean per-step loss.

    ``cross_entropy``: ``outputs`` are class distributions (..., C) and
    ``targets`` class indices (...) or distributions (..., C).  Averaged
    over all leading axes.

    ``binary_cross_entropy``: outputs and targets share a shape; averaged
    over every element.
    """
    outputs = np.asarray(outputs, dtype=float)
    if kind == "cross_entropy":
        t = _one_hot_targets(targets, outputs.shape[-1])
        per_step = -(t * np.log(np.maximum(outputs, LOG_FLOOR))).sum(axis=-1)
        return float(per_step.mean())
    if kind == "binary_cross_entropy":
        t = np.asarray(targets, dtype=float)
        ll = t * np.log(np.maximum(outputs, LOG_FLOOR)) + (1 - t) * np.log(np.maximum(1 - outputs, LOG_FLOOR))
        return float(-ll.mean())
    raise ValueError(f"unknown loss kind {kind!r}")


def loss_grad_logits(outputs: np.ndarray, targets, kind: str) -> np.ndarray:
    """d(mean loss)/d(logits) for the matching activation/loss pairs."""
    if kind == "cross_entropy":
        t = _one_hot_targets(targets, outputs.shape[-1])
        return (outputs - t) / np.prod(outputs.shape[:-1])
    if kind == "binary_cross_entropy":
        return (outputs - np.asarray(targets, dtype=float)) / outputs.size
    raise ValueError(f"unknown loss kind {kind!r}")


class Mlp:
    """ReLU hidden layers and a linear output; used by the DQL baseline."""

    def __init__(self, sizes: list[int], rng: np.random.Generator):
        self.sizes = list(sizes)
        self.params: dict[str, np.ndarray] = {}
        for i, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
            bound = np.sqrt(1.0 / fan_in)
            self.params[f"W{i}"] = rng.uniform(-bound, bound, size=(fan_out, fan_in))
            self.params[f"b{i}"] = np.zeros(fan_out)

    @property
    def depth(self) -> int:
        return len(self.sizes) - 1

    def forward(self, x: np.ndarray, return_cache: bool = False):
        acts = [np.asarray(x, dtype=float)]
        h = acts[0]
        for i in range(self.depth):
            h = h @ self.params[f"W{i}"].T + self.params[f"b{i}"]
            if i < self.depth - 1:
                h = np.maximum(h, 0.0)
            acts.append(h)
        return (h, acts) if return_cache else h

    def backward(self, acts: list[np.ndarray], d_out: np.ndarray) -> dict[str, np.ndarray]:
        grads = {}
        g = d_out
        for i in range(self.depth - 1, -1, -1):
            grads[f"W{i}"] = g.T @ acts[i]
            grads[f"b{i}"] = g.sum(0)
            if i > 0:
                g = (g @ self.params[f"W{i}"]) * (acts[i] > 0)
        return grads

    def copy_from(self, other: "Mlp"):
        for k, v in other.params.items():
            self.params[k][...] = v
