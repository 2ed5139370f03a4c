"""GRU layer with hand-written backpropagation through time.

The update rule follows the anti-jamming formulation, which places the
gates differently from the textbook GRU::

    r_t  = S(W_r l_t + U_r d_{t-1} + g_r)
    z_t  = S(W_z l_t + U_z d_{t-1} + g_z)
    dh_t = tanh(W_d l_t + U_d (z_t * d_{t-1}) + g_d)
    d_t  = (1 - r_t) * d_{t-1} + r_t * dh_t

so ``r`` interpolates between old state and candidate while ``z`` gates the
recurrent input of the candidate.  Arrays are batch-major: inputs
(B, T, I), hidden states (B, T, H).  Weight matrices are stored (H, I) and
(H, H) and applied as ``x @ W.T``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

GATE_NAMES = ("W_r", "U_r", "g_r", "W_z", "U_z", "g_z", "W_d", "U_d", "g_d")


def sigmoid(x):
    # split on sign so exp never overflows
    out = np.empty_like(x, dtype=float)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


@dataclass
class GruParams:
    W_r: np.ndarray
    U_r: np.ndarray
    g_r: np.ndarray
    W_z: np.ndarray
    U_z: np.ndarray
    g_z: np.ndarray
    W_d: np.ndarray
    U_d: np.ndarray
    g_d: np.ndarray
    tie_gates: bool = False  # reuse U_z in the r-gate (the literal tied-matrix reading)

    @property
    def input_dim(self) -> int:
        return self.W_r.shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.W_r.shape[0]

    @classmethod
    def init(cls, input_dim: int, hidden_dim: int, rng: np.random.Generator,
             tie_gates: bool = False) -> "GruParams":
        """Uniform(+-sqrt(1/fan_in)) weights, zero biases."""
        arrays = {}
        for name in GATE_NAMES:
            if name.startswith("g"):
                arrays[name] = np.zeros(hidden_dim)
            else:
                fan_in = input_dim if name.startswith("W") else hidden_dim
                bound = np.sqrt(1.0 / fan_in)
                cols = input_dim if name.startswith("W") else hidden_dim
                arrays[name] = rng.uniform(-bound, bound, size=(hidden_dim, cols))
        return cls(**arrays, tie_gates=tie_gates)

    @classmethod
    def zeros(cls, input_dim: int, hidden_dim: int) -> "GruParams":
        arrays = {n: (np.zeros(hidden_dim) if n.startswith("g") else
                      np.zeros((hidden_dim, input_dim if n.startswith("W") else hidden_dim)))
                  for n in GATE_NAMES}
        return cls(**arrays)

    def arrays(self) -> dict[str, np.ndarray]:
        out = {n: getattr(self, n) for n in GATE_NAMES}
        if self.tie_gates:
            del out["U_r"]
        return out

    def check(self):
        H, I = self.hidden_dim, self.input_dim
        for n in GATE_NAMES:
            a = getattr(self, n)
            want = (H,) if n.startswith("g") else ((H, I) if n.startswith("W") else (H, H))
            if a.shape != want:
                raise ValueError(f"{n} has shape {a.shape}, expected {want}")
            if not np.all(np.isfinite(a)):
                raise ValueError(f"{n} has non-finite entries")


@dataclass
class GruCache:
    inputs: np.ndarray
    prev: np.ndarray  # d_{t-1}, (B, T, H)
    r: np.ndarray
    z: np.ndarray
    cand: np.ndarray
    hidden: np.ndarray


def _as_batch(inputs: np.ndarray) -> tuple[np.ndarray, bool]:
    inputs = np.asarray(inputs, dtype=float)
    if inputs.ndim == 2:
        return inputs[None], True
    if inputs.ndim != 3:
        raise ValueError(f"inputs must be (T, I) or (B, T, I), got shape {inputs.shape}")
    return inputs, False


def gru_forward(params: GruParams, inputs: np.ndarray, d0: np.ndarray | None = None,
                return_cache: bool = False):
    """Run the layer over a sequence; returns hidden states d_1..d_T.

    ``inputs`` is (T, I) or (B, T, I); ``d0`` is (H,) or (B, H), zero if
    omitted.  The output matches the input's batch convention.
    """
    x, squeeze = _as_batch(inputs)
    B, T, I = x.shape
    H = params.hidden_dim
    if I != params.input_dim:
        raise ValueError(f"input dim {I} does not match layer input dim {params.input_dim}")
    if d0 is None:
        d = np.zeros((B, H))
    else:
        d = np.broadcast_to(np.asarray(d0, dtype=float), (B, H)).copy()
        if d.shape[-1] != H:
            raise ValueError("d0 does not match hidden dim")

    U_r = params.U_z if params.tie_gates else params.U_r
    # input projections for all steps at once
    xr = x @ params.W_r.T + params.g_r
    xz = x @ params.W_z.T + params.g_z
    xd = x @ params.W_d.T + params.g_d

    prev = np.empty((B, T, H))
    r_all = np.empty((B, T, H))
    z_all = np.empty((B, T, H))
    c_all = np.empty((B, T, H))
    hid = np.empty((B, T, H))
    for t in range(T):
        prev[:, t] = d
        r = sigmoid(xr[:, t] + d @ U_r.T)
        z = sigmoid(xz[:, t] + d @ params.U_z.T)
        c = np.tanh(xd[:, t] + (z * d) @ params.U_d.T)
        d = (1.0 - r) * d + r * c
        r_all[:, t], z_all[:, t], c_all[:, t], hid[:, t] = r, z, c, d

    out = hid[0] if squeeze else hid
    if return_cache:
        return out, GruCache(x, prev, r_all, z_all, c_all, hid)
    return out


def gru_backward(params: GruParams, cache: GruCache, d_hidden: np.ndarray) -> dict[str, np.ndarray]:
    """Gradients of a scalar loss w.r.t. every parameter.

    ``d_hidden`` is dLoss/dd_t for each step, (B, T, H), not including the
    recurrent contribution (which is accumulated here).
    """
    x, prev, r_all, z_all, c_all = cache.inputs, cache.prev, cache.r, cache.z, cache.cand
    B, T, H = prev.shape
    U_r = params.U_z if params.tie_gates else params.U_r

    da_r = np.empty((B, T, H))
    da_z = np.empty((B, T, H))
    da_c = np.empty((B, T, H))
    carry = np.zeros((B, H))
    for t in range(T - 1, -1, -1):
        dd = d_hidden[:, t] + carry
        r, z, c, dp = r_all[:, t], z_all[:, t], c_all[:, t], prev[:, t]
        ar = dd * (c - dp) * r * (1.0 - r)
        ac = dd * r * (1.0 - c * c)
        ds = ac @ params.U_d
        az = ds * dp * z * (1.0 - z)
        carry = dd * (1.0 - r) + ds * z + ar @ U_r + az @ params.U_z
        da_r[:, t], da_z[:, t], da_c[:, t] = ar, az, ac

    flat = lambda a: a.reshape(B * T, -1)
    xf, pf = flat(x), flat(prev)
    sf = flat(z_all * prev)
    fr, fz, fc = flat(da_r), flat(da_z), flat(da_c)
    grads = {
        "W_r": fr.T @ xf, "g_r": fr.sum(0),
        "W_z": fz.T @ xf, "g_z": fz.sum(0),
        "W_d": fc.T @ xf, "U_d": fc.T @ sf, "g_d": fc.sum(0),
    }
    if params.tie_gates:
        grads["U_z"] = fz.T @ pf + fr.T @ pf
    else:
        grads["U_r"] = fr.T @ pf
        grads["U_z"] = fz.T @ pf
    grads["d0"] = carry
    return grads
