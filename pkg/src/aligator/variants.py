"""Practical variants of ALIGATOR.

* Hedged ALIGATOR runs one instance per learning rate on a doubling grid and
  mixes them with exponentially weighted averages (EWA).
* The heuristic variant replaces ``eta * loss`` by a z-score style loss.
* ``data_driven_eta`` sets the slowest rate from the largest one-step loss any
  expert suffers, which is how forecasting runs choose their grid.
"""
from __future__ import annotations

import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from .core import (AligatorConfig, AligatorState, OfflineResult, forward_backward,
                   offline_eta, run_protocol)
from .errors import DomainError, ProtocolError

__all__ = [
    "build_grid",
    "HedgedConfig",
    "HedgedAligator",
    "HeuristicLoss",
    "heuristic_loss",
    "heuristic_state",
    "expert_one_step_losses",
    "data_driven_eta",
    "run_hedged_offline",
    "run_heuristic_offline",
    "hedged_forecast",
    "aligned_indices",
]


def build_grid(base_eta: float, n: int) -> list[float]:
    """Doubling grid ``eta, 2 eta, ...`` up to the first value ``>= max(eta, log2 n)``."""
    if not base_eta > 0:
        raise DomainError(f"base_eta must be positive, got {base_eta}")
    if n < 2:
        raise DomainError(f"n must be >= 2, got {n}")
    cap = max(base_eta, math.log2(n))
    grid = [float(base_eta)]
    while grid[-1] < cap:
        grid.append(grid[-1] * 2.0)
    return grid


@dataclass
class HedgedConfig:
    base_eta: float
    grid: list
    outer_eta: float
    inner: list = field(default_factory=list)

    @classmethod
    def build(cls, n: int, base_eta: float, outer_eta: float | None = None,
              **inner_kwargs) -> "HedgedConfig":
        grid = build_grid(base_eta, max(n, 2))
        inner = [AligatorConfig(n=n, eta=eta, **inner_kwargs) for eta in grid]
        return cls(base_eta, grid, base_eta if outer_eta is None else outer_eta, inner)

    def __post_init__(self):
        if not self.outer_eta > 0:
            raise DomainError(f"outer_eta must be positive, got {self.outer_eta}")
        if any(b <= a for a, b in zip(self.grid, self.grid[1:])):
            raise DomainError("grid must be strictly increasing")


class HedgedAligator:
    """EWA over ALIGATOR instances that differ only in their learning rate.

    The outer layer predicts the EWA-weighted mean of the instance predictions
    and charges instance ``k`` the squared loss of its own prediction.  When
    ``outer_eta`` is small enough for the squared loss to be exp-concave on the
    range of predictions and observations, the hedged cumulative loss exceeds
    that of the best instance by at most ``log(K) / outer_eta``.
    """

    def __init__(self, config: HedgedConfig, record: bool = False):
        self.config = config
        self.instances = [AligatorState(c, record=record) for c in config.inner]
        self.cumulative_losses = np.zeros(len(self.instances))
        self.loss = 0.0
        self.pending = None

    @classmethod
    def from_rates(cls, n: int, base_eta: float, outer_eta: float | None = None,
                   **inner_kwargs) -> "HedgedAligator":
        return cls(HedgedConfig.build(n, base_eta, outer_eta, **inner_kwargs))

    @property
    def outer_weights(self) -> np.ndarray:
        logits = -self.config.outer_eta * self.cumulative_losses
        logits -= logits.max()
        w = np.exp(logits)
        return w / w.sum()

    def step(self, i: int) -> float:
        if self.pending is not None:
            raise ProtocolError("step called twice without feed")
        preds = np.array([inst.step(i) for inst in self.instances])
        yhat = float(self.outer_weights @ preds)
        self.pending = (yhat, preds)
        return yhat

    def feed(self, y: float) -> None:
        if self.pending is None:
            raise ProtocolError("feed called without a pending step")
        yhat, preds = self.pending
        for inst in self.instances:
            inst.feed(y)
        self.cumulative_losses += (y - preds) ** 2
        self.loss += (y - yhat) ** 2
        self.pending = None

    def forecast(self, h: int, clip_bound: float | None = None) -> np.ndarray:
        forecasts = np.array([inst.forecast(h, clip_bound) for inst in self.instances])
        return self.outer_weights @ forecasts

    def certificate(self) -> tuple[float, float]:
        """``(hedged loss, best instance loss + log(K) / outer_eta)``."""
        bound = (self.cumulative_losses.min()
                 + math.log(len(self.instances)) / self.config.outer_eta)
        return self.loss, float(bound)

    @property
    def touches(self) -> int:
        return sum(inst.touches for inst in self.instances)


def heuristic_loss(raw_sq_loss: float, sigma: float, m: float,
                   multiplier: float = 2.0) -> float:
    """``raw / (multiplier * (sigma**2 + sigma**2 / m))``; ``m = 0`` counts as 1."""
    if not sigma > 0:
        raise DomainError(f"sigma must be positive, got {sigma}")
    if m < 1:
        m = 1
    var = sigma * sigma
    return raw_sq_loss / (multiplier * (var + var / m))


@dataclass(frozen=True)
class HeuristicLoss:
    """Per-expert loss ``raw / (2 (sigma^2 + sigma^2 / m))`` as a state hook."""

    sigma: float
    multiplier: float = 2.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise DomainError(f"sigma must be positive, got {self.sigma}")

    def __call__(self, raw_sq_loss: float, m: int) -> float:
        var = self.sigma * self.sigma
        return raw_sq_loss / (self.multiplier * (var + var / (m if m >= 1 else 1)))


def heuristic_state(config: AligatorConfig, sigma: float,
                    record: bool = False) -> AligatorState:
    return AligatorState(config, HeuristicLoss(sigma), record)


def expert_one_step_losses(ys: Sequence[float], expert_kind="average",
                           indices: Sequence[int] | None = None,
                           n: int | None = None) -> dict:
    """Squared one-step-ahead loss of every expert over its awake rounds.

    Expert predictions do not depend on the learning rate, so one pass of an
    instance with an arbitrary rate exposes them.
    """
    ys = [float(y) for y in ys]
    if not ys:
        raise DomainError("need at least one observation")
    if indices is None:
        indices = range(1, len(ys) + 1)
    n = len(ys) if n is None else n
    state = AligatorState(AligatorConfig(n=n, eta=1.0, expert_kind=expert_kind),
                          record=True)
    run_protocol(state, indices, ys)
    losses: dict = {}
    for rd in state.rounds:
        for key, pred in zip(rd.awake, rd.expert_predictions):
            losses.setdefault(key, []).append((rd.observation - pred) ** 2)
    return losses


def data_driven_eta(expert_losses: Mapping[object, Iterable[float]] | Iterable[float]) -> float:
    """``1 / (2 beta)`` with ``beta`` the largest recorded one-step loss."""
    if isinstance(expert_losses, Mapping):
        values = [max(v) for v in expert_losses.values() if len(v)]
    else:
        values = list(expert_losses)
    if not values:
        raise DomainError("no one-step losses recorded")
    beta = max(values)
    if not beta > 0:
        raise DomainError("all one-step losses are zero; rate is undefined")
    return 1.0 / (2.0 * beta)


def run_hedged_offline(ys: Sequence[float], truth: Sequence[float] | None = None,
                       base_eta: float | None = None, outer_eta: float | None = None,
                       **inner_kwargs) -> OfflineResult:
    """Forward-backward hedged ALIGATOR; both rates default to ``offline_eta``."""
    ys = np.asarray(ys, dtype=float)
    eta = offline_eta(ys) if np.any(ys) else 0.125
    base = eta if base_eta is None else base_eta
    outer = eta if outer_eta is None else outer_eta
    config = HedgedConfig.build(len(ys), base, outer, **inner_kwargs)
    return forward_backward(lambda: HedgedAligator(config), ys, truth)


def run_heuristic_offline(ys: Sequence[float], sigma: float,
                          truth: Sequence[float] | None = None,
                          **config_kwargs) -> OfflineResult:
    ys = np.asarray(ys, dtype=float)
    config = AligatorConfig(n=len(ys), **config_kwargs)
    return forward_backward(lambda: heuristic_state(config, sigma), ys, truth)


def aligned_indices(w: int) -> tuple[int, range]:
    """Horizon and isotonic indices that end a window of ``w`` values at ``2**K - 1``.

    The cover elements containing ``2**K - 1`` are exactly the suffixes of
    ``[1, 2**K - 1]`` of lengths ``1, 2, ..., 2**(K-1)``, so at the forecast
    origin every awake expert has seen its whole interval.  Ending the window
    at ``w`` instead can leave only freshly started experts awake.
    """
    if w < 1:
        raise DomainError(f"window must be non-empty, got {w}")
    n = (1 << w.bit_length()) - 1
    return n, range(n - w + 1, n + 1)


def hedged_forecast(window: Sequence[float], h: int, expert_kind=1,
                    clip_bound: float | None = None, center: bool = True) -> np.ndarray:
    """Train hedged ALIGATOR on ``window`` in time order and forecast ``h`` steps.

    The slowest grid rate and the outer EWA rate are both ``1/(2 beta)`` from
    :func:`data_driven_eta`, falling back to ``1/8`` when every expert is exact.
    Indices come from :func:`aligned_indices`.

    With ``center`` the window mean is subtracted before training and added
    back to the forecasts.  An expert predicts 0 before its first observation,
    so on data far from 0 every expert started inside the window pays a birth
    loss of order ``y**2`` and the fast-rate instances never trust it.
    """
    window = np.asarray(window, dtype=float)
    offset = float(window.mean()) if center else 0.0
    window = window - offset
    n, indices = aligned_indices(len(window))
    try:
        eta = data_driven_eta(expert_one_step_losses(window, expert_kind, indices, n))
    except DomainError:
        eta = 0.125
    hedged = HedgedAligator.from_rates(n, eta, eta, expert_kind=expert_kind)
    run_protocol(hedged, indices, window)
    return hedged.forecast(h, clip_bound) + offset
