"""User-side spectrum sensing by amplitude thresholding.

Each channel yields one amplitude sample per slot, ``chi = upsilon + n`` on a
jammed (or otherwise occupied) channel and ``chi = n`` on a free one, with
``n ~ N(0, delta^2)``.  A channel is flagged busy when ``chi >= threshold``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special


@dataclass(frozen=True)
class SensingConfig:
    """Thresholding parameters.

    Attributes:
        threshold_ratio: detection threshold over noise std, Gamma/delta.
        jnr_db: jamming-to-noise power ratio at the sensor, in dB.
        noise_std: noise standard deviation delta (amplitude units).
        ideal: bypass thresholding entirely (sensed == truth).
    """

    threshold_ratio: float = 2.8117
    jnr_db: float = 15.0
    noise_std: float = 1.0
    ideal: bool = False

    def __post_init__(self):
        if not self.threshold_ratio >= 0:
            raise ValueError(f"threshold_ratio must be >= 0, got {self.threshold_ratio}")
        if not self.noise_std > 0:
            raise ValueError(f"noise_std must be > 0, got {self.noise_std}")

    @property
    def threshold(self) -> float:
        return self.threshold_ratio * self.noise_std

    @property
    def amplitude_ratio(self) -> float:
        """Upsilon/delta.  JNR is a power ratio, the sensed sample an amplitude."""
        return 10.0 ** (self.jnr_db / 20.0)

    @property
    def amplitude(self) -> float:
        return self.amplitude_ratio * self.noise_std


def q_function(x):
    """Gaussian tail probability P(Z > x) for standard normal Z.

    Accepts scalars or arrays.  Uses erfc, so the far tail keeps full
    relative precision instead of cancelling against 1.
    """
    if np.ndim(x) == 0:
        return 0.5 * math.erfc(float(x) / math.sqrt(2.0))
    return 0.5 * special.erfc(np.asarray(x, dtype=float) / np.sqrt(2.0))


def p_false_alarm(cfg: SensingConfig) -> float:
    if cfg.ideal:
        return 0.0
    return q_function(cfg.threshold_ratio)


def p_miss_detection(cfg: SensingConfig) -> float:
    if cfg.ideal:
        return 0.0
    return q_function(cfg.amplitude_ratio - cfg.threshold_ratio)


def threshold_for_false_alarm(p_fa: float) -> float:
    """Gamma/delta giving the requested false-alarm probability."""
    return float(special.ndtri(1.0 - p_fa))


def jnr_for_miss_detection(p_md: float, threshold_ratio: float) -> float:
    """JNR (dB) at which a threshold yields the requested miss probability."""
    amp = threshold_ratio + float(special.ndtri(1.0 - p_md))
    return 20.0 * math.log10(amp)


def sense(true_busy: np.ndarray, cfg: SensingConfig, rng: np.random.Generator) -> np.ndarray:
    """Flip a true occupancy vector through the thresholding detector.

    Busy channels are flagged with probability ``1 - P_md`` and free ones
    with probability ``P_fa``, independently per entry.  Works on any shape.
    """
    true_busy = np.asarray(true_busy, dtype=bool)
    if cfg.ideal:
        return true_busy.astype(np.int8)
    u = rng.random(true_busy.shape)
    p_flag = np.where(true_busy, 1.0 - p_miss_detection(cfg), p_false_alarm(cfg))
    return (u < p_flag).astype(np.int8)


def sense_amplitudes(true_busy: np.ndarray, cfg: SensingConfig, rng: np.random.Generator) -> np.ndarray:
    """Sample the amplitude model directly and threshold it.

    Statistically equivalent to :func:`sense`; kept as the signal-level
    reference the Q-function expressions are checked against.
    """
    true_busy = np.asarray(true_busy, dtype=bool)
    chi = true_busy * cfg.amplitude + rng.normal(0.0, cfg.noise_std, size=true_busy.shape)
    return (chi >= cfg.threshold).astype(np.int8)
