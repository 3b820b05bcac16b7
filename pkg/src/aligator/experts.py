"""Local predictors attached to one interval of the geometric cover."""
from __future__ import annotations

import math

import numpy as np

from .errors import DomainError

__all__ = ["RunningAverageExpert", "PolynomialExpert", "make_expert"]


def _check_finite(y: float) -> float:
    y = float(y)
    if not math.isfinite(y):
        raise DomainError(f"observation must be finite, got {y}")
    return y


def _clip(value: float, bound: float) -> float:
    if value > bound:
        return bound
    if value < -bound:
        return -bound
    return value


class RunningAverageExpert:
    """Mean of the observations routed to the expert so far, 0 before any."""

    __slots__ = ("sum", "count")

    def __init__(self):
        self.sum = 0.0
        self.count = 0

    def predict(self, t: int = 0, clip_bound: float = math.inf) -> float:
        if self.count == 0:
            return 0.0
        return _clip(self.sum / self.count, clip_bound)

    def observe(self, t: int, y: float) -> None:
        self.sum += _check_finite(y)
        self.count += 1

    def extrapolate(self, t_future: int = 0, clip_bound: float = math.inf) -> float:
        return self.predict(t_future, clip_bound)


class PolynomialExpert:
    """Online ridge least-squares fit of a degree-``d`` polynomial in time.

    Time enters through ``u = (t - start) / length`` so that the in-interval
    design stays well conditioned whatever the absolute time index.  Until
    ``d + 1`` observations have arrived the expert predicts their plain mean.

    Parameters
    ----------
    degree : int
        Polynomial degree ``d >= 0``.
    start, length : int
        Interval the expert is attached to; they only set the time scaling.
    ridge : float
        Penalty added to the diagonal of the moment matrix.
    """

    __slots__ = ("degree", "start", "length", "ridge", "count", "sum",
                 "moment_matrix", "moment_vector", "_coef")

    def __init__(self, degree: int, start: int = 1, length: int = 1,
                 ridge: float = 1e-8):
        if degree < 0:
            raise DomainError(f"degree must be >= 0, got {degree}")
        if length < 1:
            raise DomainError(f"length must be >= 1, got {length}")
        if not ridge > 0:
            raise DomainError(f"ridge must be positive, got {ridge}")
        self.degree = degree
        self.start = start
        self.length = length
        self.ridge = ridge
        self.count = 0
        self.sum = 0.0
        self.moment_matrix = np.zeros((degree + 1, degree + 1))
        self.moment_vector = np.zeros(degree + 1)
        self._coef = None

    @property
    def time_origin(self) -> int:
        return self.start

    def basis(self, t: float) -> np.ndarray:
        u = (t - self.start) / self.length
        return u ** np.arange(self.degree + 1)

    def coefficients(self) -> np.ndarray:
        if self._coef is None:
            system = self.moment_matrix + self.ridge * np.eye(self.degree + 1)
            self._coef = np.linalg.solve(system, self.moment_vector)
        return self._coef

    def _evaluate(self, t: float, clip_bound: float) -> float:
        if self.count == 0:
            return 0.0
        if self.count <= self.degree:
            value = self.sum / self.count
        else:
            value = float(self.basis(t) @ self.coefficients())
        return _clip(value, clip_bound)

    def predict(self, t: int, clip_bound: float = math.inf) -> float:
        return self._evaluate(t, clip_bound)

    def extrapolate(self, t_future: int, clip_bound: float = math.inf) -> float:
        return self._evaluate(t_future, clip_bound)

    def observe(self, t: int, y: float) -> None:
        y = _check_finite(y)
        x = self.basis(t)
        self.moment_matrix += np.outer(x, x)
        self.moment_vector += x * y
        self.sum += y
        self.count += 1
        self._coef = None


def make_expert(kind: str | int, start: int, length: int, ridge: float = 1e-8):
    """Build an expert from a kind name or polynomial degree.

    ``"average"`` gives the running mean; an integer ``d`` or ``"poly<d>"``
    gives a degree-``d`` polynomial fit.
    """
    if kind in ("average", "running-average", "mean"):
        return RunningAverageExpert()
    degree = parse_degree(kind)
    return PolynomialExpert(degree, start, length, ridge)


def parse_degree(kind: str | int) -> int:
    if isinstance(kind, int):
        return kind
    text = str(kind)
    for prefix in ("polynomial", "poly"):
        if text.startswith(prefix):
            text = text[len(prefix):].strip(":()= ")
            break
    try:
        return int(text)
    except ValueError:
        raise DomainError(f"unknown expert kind {kind!r}") from None
