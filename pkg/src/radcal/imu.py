"""Yaw-rate measurement model: ``omega = s * omega_true + b + noise``.

The bias is constant over a recording and is recovered by averaging the
readings of stationary windows. The scale factor is not handled here; it is
estimated jointly with the mounting angle in :mod:`radcal.mount`.
"""

from __future__ import annotations

from dataclasses import dataclass
from statistics import fmean
from typing import Sequence

import numpy as np

from radcal.errors import DomainError, InsufficientDataError

STATIONARY_SPEED = 0.05  # m/s
STATIONARY_MIN_DURATION = 1.0  # s


@dataclass(frozen=True)
class ImuSample:
    t: float
    yaw_rate: float


@dataclass(frozen=True)
class ImuModel:
    scale: float = 1.0
    bias: float = 0.0
    noise_std: float = 0.0

    def __post_init__(self):
        if not self.scale > 0:
            raise DomainError("IMU scale factor must be positive")
        if not self.noise_std >= 0:
            raise DomainError("IMU noise std must be non-negative")


def apply_measurement_model(true_rate, model: ImuModel, noise_draw=0.0):
    return model.scale * true_rate + model.bias + noise_draw


def estimate_bias(stationary: Sequence[ImuSample]) -> float:
    """Sample mean of stationary yaw-rate readings (correctly rounded sum)."""
    if len(stationary) == 0:
        raise InsufficientDataError("bias estimation needs at least one stationary sample")
    return fmean(s.yaw_rate for s in stationary)


def debias(omega, bias_estimate: float):
    return omega - bias_estimate


def stationary_mask(times, speeds, speed_threshold: float = STATIONARY_SPEED,
                    min_duration: float = STATIONARY_MIN_DURATION) -> np.ndarray:
    """Mark samples lying in runs with ``|speed| < speed_threshold`` lasting ``>= min_duration``.

    ``times`` must be increasing. The run duration is measured between its first
    and last sample.
    """
    times = np.asarray(times, dtype=float)
    still = np.abs(np.asarray(speeds, dtype=float)) < speed_threshold
    mask = np.zeros(times.shape, dtype=bool)
    k, n = 0, times.shape[0]
    while k < n:
        if not still[k]:
            k += 1
            continue
        end = k
        while end + 1 < n and still[end + 1]:
            end += 1
        if times[end] - times[k] >= min_duration - 1e-9:
            mask[k:end + 1] = True
        k = end + 1
    return mask


def interpolate_rate(samples: Sequence[ImuSample], t) -> np.ndarray:
    """Linear interpolation of the yaw-rate stream at times ``t`` (held at the ends)."""
    ts = np.fromiter((s.t for s in samples), float, len(samples))
    ws = np.fromiter((s.yaw_rate for s in samples), float, len(samples))
    return np.interp(t, ts, ws)


def simulate_readings(true_rates, model: ImuModel, rng: np.random.Generator) -> np.ndarray:
    """Vectorized measurement model with Gaussian noise drawn from ``rng``."""
    true_rates = np.asarray(true_rates, dtype=float)
    noise = rng.normal(0.0, model.noise_std, true_rates.shape) if model.noise_std > 0 else np.zeros_like(true_rates)
    return apply_measurement_model(true_rates, model, noise)


def bias_from_stream(samples: Sequence[ImuSample], mask) -> float:
    picked = [s for s, m in zip(samples, mask) if m]
    return estimate_bias(picked)

