"""Synthetic test signals and Gaussian observation noise."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = [
    "Signal",
    "doppler",
    "heavisine",
    "total_variation",
    "add_noise",
    "gaussian_noise",
    "calibrate_amplitude",
    "make_signal",
    "SIGNALS",
    "TV_TARGETS",
]


def total_variation(values) -> float:
    """Sum of absolute successive differences."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise DomainError("total variation of an empty sequence")
    return float(np.abs(np.diff(values)).sum())


@dataclass(frozen=True)
class Signal:
    name: str
    values: np.ndarray

    @property
    def n(self) -> int:
        return len(self.values)

    @property
    def tv(self) -> float:
        return total_variation(self.values)

    @property
    def bound(self) -> float:
        return float(np.max(np.abs(self.values)))


def _grid(n: int) -> np.ndarray:
    if n < 2:
        raise DomainError(f"signal length must be >= 2, got {n}")
    return np.arange(1, n + 1) / n


def doppler(n: int, amplitude_scale: float = 1.0) -> Signal:
    x = _grid(n)
    values = amplitude_scale * np.sqrt(x * (1 - x)) * np.sin(2 * np.pi * 1.05 / (x + 0.05))
    return Signal("doppler", values)


def heavisine(n: int, amplitude_scale: float = 1.0) -> Signal:
    x = _grid(n)
    values = amplitude_scale * (4 * np.sin(4 * np.pi * x)
                                - np.sign(x - 0.3) - np.sign(0.72 - x))
    return Signal("heavisine", values)


SIGNALS = {"doppler": doppler, "heavisine": heavisine}


def calibrate_amplitude(name: str, target_tv: float, n: int = 2048) -> float:
    """Amplitude scale at which the sampled signal has total variation ``target_tv``.

    Total variation is linear in the scale, so one evaluation suffices.
    """
    base = SIGNALS[name](n, 1.0).tv
    return target_tv / base


# Total variation each waveform is scaled to at the calibration length.
TV_TARGETS = {"doppler": 27.0, "heavisine": 7.2}
CALIBRATION_LENGTH = 2048


def make_signal(name: str, n: int, amplitude_scale: float | None = None) -> Signal:
    """Named signal; the amplitude defaults to the calibrated one."""
    if name not in SIGNALS:
        raise DomainError(f"unknown signal {name!r}; choose from {sorted(SIGNALS)}")
    if amplitude_scale is None:
        amplitude_scale = calibrate_amplitude(name, TV_TARGETS[name], CALIBRATION_LENGTH)
    return SIGNALS[name](n, amplitude_scale)


def gaussian_noise(size: int, sigma: float, seed: int) -> np.ndarray:
    """Box-Muller normals from a Philox counter-based generator.

    Philox output depends only on the key and counter, and the transform uses
    only ``log``, ``sqrt``, ``cos`` and ``sin``, so a seed pins the draws
    independently of numpy's default normal sampler.
    """
    if sigma < 0:
        raise DomainError(f"sigma must be non-negative, got {sigma}")
    gen = np.random.Generator(np.random.Philox(seed & (2 ** 64 - 1)))
    pairs = (size + 1) // 2
    u1 = 1.0 - gen.random(pairs)  # (0, 1]
    u2 = gen.random(pairs)
    radius = np.sqrt(-2.0 * np.log(u1))
    z = np.concatenate([radius * np.cos(2 * np.pi * u2), radius * np.sin(2 * np.pi * u2)])
    return sigma * z[:size]


def add_noise(signal, sigma: float, seed: int) -> np.ndarray:
    """Observations ``theta + N(0, sigma^2)`` noise drawn with ``seed``."""
    values = signal.values if isinstance(signal, Signal) else np.asarray(signal, dtype=float)
    return values + gaussian_noise(len(values), sigma, seed)
