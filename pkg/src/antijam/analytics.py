"""Ergodic rates under Nakagami-m fading, their Monte-Carlo oracles, and STR.

The ergodic rate of a user that picks the strongest of ``n`` i.i.d. channels
is obtained by integrating the complementary CDF of the maximum against
``rho / (1 + rho x)``::

    R = rho/ln2 * int_0^inf [1 - P(m, m x/lambda)^n] / (1 + rho x) dx

with ``P`` the regularized lower incomplete gamma function.  A uniformly
random pick is the ``n = 1`` case, where ``1 - P = Q`` (regularized upper).
Both are evaluated by adaptive quadrature after mapping [0, inf) onto [0, 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .spectrum import FadingModel, sample_gains


class QuadratureError(RuntimeError):
    pass


@dataclass(frozen=True)
class ErConfig:
    num_channels: int
    jammed: int = 0
    num_users: int = 1
    shape: float = 1.0
    mean_power: float = 1.0
    snr: float = 10.0

    def __post_init__(self):
        if not 0 <= self.jammed <= self.num_channels:
            raise ValueError(f"jammed count must lie in [0, L], got {self.jammed}")
        if self.num_users < 1:
            raise ValueError("num_users must be >= 1")
        if not self.snr > 0:
            raise ValueError("snr must be > 0")
        FadingModel(self.shape, self.mean_power)

    @property
    def free(self) -> int:
        return self.num_channels - self.jammed

    @property
    def free_with_interference(self) -> int:
        return self.num_channels - self.num_users - self.jammed + 1


def _integrate_ccdf(ccdf, mean_power: float, snr: float, tol: float) -> float:
    """rho/ln2 * int_0^inf ccdf(x) / (1 + rho x) dx via x = t/(1-t)."""

    def integrand(t):
        if t >= 1.0:
            return 0.0
        x = t / (1.0 - t)
        return ccdf(x) / (1.0 + snr * x) / (1.0 - t) ** 2

    # Split at the image of x = mean power so the adaptive rule sees the knee.
    knee = mean_power / (1.0 + mean_power)
    total = 0.0
    for lo, hi in ((0.0, knee), (knee, 1.0)):
        val, err, info, *msg = integrate.quad(integrand, lo, hi, epsabs=tol, epsrel=tol,
                                              limit=500, full_output=1)
        if msg and err > 1e-7:
            raise QuadratureError(f"quadrature did not converge on [{lo:.3f}, {hi:.3f}] "
                                  f"(abs err {err:.2e}, {info['last']} subintervals): {msg[0]}")
        total += val
    return snr / math.log(2.0) * total


def _max_of_n(n: int, shape: float, mean_power: float, snr: float, tol: float) -> float:
    if n <= 0:
        return 0.0
    scale = shape / mean_power

    def ccdf(x):
        # 1 - P^n, with log P taken from whichever tail is better conditioned
        q = special.gammaincc(shape, scale * x)
        if q >= 1.0:
            return 1.0
        log_p = math.log1p(-q) if q < 0.5 else math.log(special.gammainc(shape, scale * x))
        return -math.expm1(n * log_p)

    return _integrate_ccdf(ccdf, mean_power, snr, tol)


def er_max_selection(cfg: ErConfig, tol: float = 1e-10) -> float:
    """Ergodic rate when the best of the ``L - jammed`` free channels is used."""
    return _max_of_n(cfg.free, cfg.shape, cfg.mean_power, cfg.snr, tol)


def er_interference(cfg: ErConfig, tol: float = 1e-10) -> float:
    """Best-channel ergodic rate when other users also remove channels.

    Each of the other ``N - 1`` users occupies one channel, leaving
    ``L - N - jammed + 1`` candidates; ``N = 1`` recovers
    :func:`er_max_selection`.
    """
    return _max_of_n(cfg.free_with_interference, cfg.shape, cfg.mean_power, cfg.snr, tol)


def er_random(cfg: ErConfig, tol: float = 1e-10) -> float:
    """Ergodic rate of a uniformly random (gain-blind) channel pick.

    Integrates the upper incomplete gamma Gamma(m, m x/lambda) / Gamma(m)
    directly rather than through a special-function closed form.
    """
    scale = cfg.shape / cfg.mean_power
    gamma_m = special.gamma(cfg.shape)

    def upper_gamma(x):
        return special.gammaincc(cfg.shape, scale * x) * gamma_m

    return _integrate_ccdf(upper_gamma, cfg.mean_power, cfg.snr, tol) / gamma_m


def er_random_rayleigh(snr: float, mean_power: float = 1.0) -> float:
    """Closed form for m = 1: exp(1/s) E1(1/s) / ln 2 with s = snr * mean_power."""
    s = snr * mean_power
    return float(special.exp1(1.0 / s) * math.exp(1.0 / s) / math.log(2.0))


@dataclass(frozen=True)
class McEstimate:
    mean: float
    stderr: float
    trials: int


def mc_er_oracle(cfg: ErConfig, selection: str, trials: int, rng: np.random.Generator,
                 n: int | None = None) -> McEstimate:
    """Monte-Carlo ergodic rate with ``best_of_n`` or ``random`` selection.

    ``n`` defaults to the free-channel count of ``cfg``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    n = cfg.free if n is None else n
    fading = FadingModel(cfg.shape, cfg.mean_power)
    if n < 1:
        return McEstimate(0.0, 0.0, trials)
    if selection == "best_of_n":
        x = sample_gains(fading, (trials, n), rng).max(axis=1)
    elif selection == "random":
        g = sample_gains(fading, (trials, n), rng)
        x = g[np.arange(trials), rng.integers(0, n, size=trials)]
    else:
        raise ValueError(f"unknown selection {selection!r}")
    r = np.log2(1.0 + cfg.snr * x)
    stderr = float(r.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return McEstimate(float(r.mean()), stderr, trials)


def str_metric(success, window: int | None = None, sliding: bool = False):
    """Successful-transmission ratio of a boolean trace.

    ``window=None`` gives the ratio over the whole trace.  With a window and
    ``sliding=True`` returns the trailing-window ratio at every position
    (shorter at the start); otherwise the ratio over the last ``window``
    entries.
    """
    s = np.asarray(success, dtype=float)
    if s.size == 0:
        raise ValueError("empty trace")
    if window is None:
        return float(s.mean())
    if window < 1:
        raise ValueError("window must be >= 1")
    if not sliding:
        return float(s[-window:].mean())
    c = np.concatenate([[0.0], np.cumsum(s)])
    idx = np.arange(1, s.size + 1)
    lo = np.maximum(idx - window, 0)
    return (c[idx] - c[lo]) / (idx - lo)


def er_table(num_channels: int, num_users: int, shape: float, mean_power: float, snr: float,
             jammed_values) -> list[dict]:
    """Rows of analytic ER versus jammed count for reporting."""
    rows = []
    for v in jammed_values:
        cfg = ErConfig(num_channels, int(v), num_users, shape, mean_power, snr)
        rows.append({
            "jammed": int(v),
            "er_max_selection": er_max_selection(cfg),
            "er_interference": er_interference(cfg),
            "er_random": er_random(cfg),
        })
    return rows
