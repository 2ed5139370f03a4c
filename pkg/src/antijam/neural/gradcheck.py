from __future__ import annotations

import numpy as np

from .model import GruModel


def finite_difference_check(model: GruModel, inputs: np.ndarray, targets, step: float = 1e-5) -> float:
    """Max relative error between BPTT and central differences over all parameters."""
    _, grads = model.loss_and_grads(inputs, targets)
    worst = 0.0
    for name, p in model.params().items():
        for idx in np.ndindex(p.shape):
            old = p[idx]
            p[idx] = old + step
            up = model.loss(inputs, targets)
            p[idx] = old - step
            down = model.loss(inputs, targets)
            p[idx] = old
            fd = (up - down) / (2 * step)
            an = grads[name][idx]
            denom = max(abs(fd), abs(an), 1e-7)
            worst = max(worst, abs(fd - an) / denom)
    return worst


def random_instance(seed: int, input_dim: int = 6, hidden_dim: int = 4, out_dim: int = 3,
                    steps: int = 5, batch: int = 2, activation: str = "softmax"):
    rng = np.random.default_rng(seed)
    model = GruModel.init(input_dim, hidden_dim, out_dim, activation, rng)
    # nonzero biases so every gradient path is exercised
    for v in model.params().values():
        if v.ndim == 1:
            v[:] = rng.normal(scale=0.3, size=v.shape)
    x = rng.normal(size=(batch, steps, input_dim))
    if activation == "softmax":
        y = rng.integers(0, out_dim, size=(batch, steps))
    else:
        y = (rng.random((batch, steps, out_dim)) < 0.5).astype(float)
    return model, x, y
