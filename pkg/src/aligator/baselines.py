"""Comparison methods: Haar soft thresholding, Holt smoothing, a running mean."""
from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = [
    "HaarTransform",
    "haar_forward",
    "haar_inverse",
    "soft_threshold",
    "mad_sigma",
    "wavelet_denoise",
    "HoltState",
    "holt_fit",
    "holt_forecast",
    "holt_levels",
    "running_mean_predictions",
]

_SQRT2 = math.sqrt(2.0)
MAD_CONSTANT = 0.6745


@dataclass
class HaarTransform:
    """Orthonormal decimated Haar coefficients of a reflect-padded signal.

    ``levels[0]`` holds the finest details.  ``approx`` has length one because
    the transform always runs to the maximal depth.
    """

    levels: list
    approx: np.ndarray
    original_length: int
    padding: str = "reflect"

    @property
    def padded_length(self) -> int:
        return len(self.approx) << len(self.levels)

    def coefficients(self) -> np.ndarray:
        return np.concatenate([self.approx, *reversed(self.levels)])


def _pad(y: np.ndarray) -> np.ndarray:
    n = len(y)
    target = 1 << (n - 1).bit_length()
    if target == n:
        return y
    # numpy's reflect needs repeated application when the pad exceeds n - 1
    while len(y) < target:
        y = np.pad(y, (0, min(target - len(y), len(y) - 1)), mode="reflect")
    return y


def haar_forward(y: Sequence[float]) -> HaarTransform:
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or len(y) < 1:
        raise DomainError("need a non-empty one-dimensional sequence")
    approx = _pad(y)
    levels = []
    while len(approx) > 1:
        even, odd = approx[0::2], approx[1::2]
        levels.append((even - odd) / _SQRT2)
        approx = (even + odd) / _SQRT2
    return HaarTransform(levels, approx, len(y))


def haar_inverse(transform: HaarTransform) -> np.ndarray:
    approx = np.asarray(transform.approx, dtype=float)
    for detail in reversed(transform.levels):
        out = np.empty(2 * len(approx))
        out[0::2] = (approx + detail) / _SQRT2
        out[1::2] = (approx - detail) / _SQRT2
        approx = out
    return approx[:transform.original_length]


def soft_threshold(d, lam: float):
    """``sign(d) * max(|d| - lam, 0)``."""
    return np.sign(d) * np.maximum(np.abs(d) - lam, 0.0)


def mad_sigma(y: Sequence[float]) -> float:
    """Noise level from the median absolute finest-scale Haar detail.

    Only pairs of original samples enter, so reflect padding cannot bias the
    estimate toward zero.
    """
    y = np.asarray(y, dtype=float)
    if len(y) < 2:
        raise DomainError("mad_sigma needs at least two samples")
    m = len(y) // 2 * 2
    finest = (y[0:m:2] - y[1:m:2]) / _SQRT2
    return float(np.median(np.abs(finest)) / MAD_CONSTANT)


def wavelet_denoise(y: Sequence[float], sigma: float | None = None) -> np.ndarray:
    """Universal soft thresholding (``lambda = sigma sqrt(2 log n)``) in the Haar basis."""
    y = np.asarray(y, dtype=float)
    if len(y) < 2:
        raise DomainError("wavelet_denoise needs at least two samples")
    if sigma is None:
        sigma = mad_sigma(y)
    if sigma < 0:
        raise DomainError(f"sigma must be non-negative, got {sigma}")
    lam = sigma * math.sqrt(2.0 * math.log(len(y)))
    transform = haar_forward(y)
    transform.levels = [soft_threshold(d, lam) for d in transform.levels]
    return haar_inverse(transform)


@dataclass
class HoltState:
    """Level and trend of Holt's linear exponential smoothing."""

    level: float
    trend: float
    alpha: float = 0.5
    beta: float = 0.3

    def update(self, y: float) -> None:
        previous = self.level
        self.level = self.alpha * y + (1 - self.alpha) * (self.level + self.trend)
        self.trend = self.beta * (self.level - previous) + (1 - self.beta) * self.trend


def _check_unit(name: str, value: float) -> None:
    if not 0 < value < 1:
        raise DomainError(f"{name} must lie in (0, 1), got {value}")


def holt_fit(y: Sequence[float], alpha: float = 0.5, beta: float = 0.3) -> HoltState:
    """Run Holt's recursions over ``y`` from ``level = y1``, ``trend = y2 - y1``."""
    _check_unit("alpha", alpha)
    _check_unit("beta", beta)
    y = np.asarray(y, dtype=float)
    if len(y) < 2:
        raise DomainError("holt_fit needs at least two observations")
    state = HoltState(float(y[0]), float(y[1] - y[0]), alpha, beta)
    for value in y[1:]:
        state.update(float(value))
    return state


def holt_forecast(state: HoltState, h: int) -> np.ndarray:
    if h < 1:
        raise DomainError(f"forecast horizon must be >= 1, got {h}")
    return state.level + state.trend * np.arange(1, h + 1)


def holt_levels(y: Sequence[float], alpha: float = 0.5, beta: float = 0.3) -> np.ndarray:
    """Smoothed level after each observation, usable as an in-sample fit."""
    state = holt_fit(np.asarray(y, dtype=float)[:2], alpha, beta)
    levels = [float(y[0]), state.level]
    for value in np.asarray(y, dtype=float)[2:]:
        state.update(float(value))
        levels.append(state.level)
    return np.asarray(levels)


def running_mean_predictions(y: Sequence[float]) -> np.ndarray:
    """One-step-ahead predictions of the mean of all earlier observations (0 first)."""
    y = np.asarray(y, dtype=float)
    out = np.zeros(len(y))
    if len(y) > 1:
        out[1:] = np.cumsum(y)[:-1] / np.arange(1, len(y))
    return out
