"""ALIGATOR: aggregation of online averages over the geometric cover.

One expert per cover element inside ``[1, n]``.  On a query for index ``i``
the experts whose interval contains ``i`` wake up, the specialist pool mixes
their predictions, and once the observation arrives each awake expert is
charged ``eta * (y - prediction)**2`` before it absorbs the observation.
"""
from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, DomainError, ProtocolError
from .experts import RunningAverageExpert, make_expert
from .geometric_cover import CoverIndex, DyadicInterval, _interval
from .sleeping_experts import SpecialistPool

__all__ = [
    "AligatorConfig",
    "AligatorState",
    "RoundDetail",
    "RunTrace",
    "OfflineResult",
    "theoretical_eta",
    "offline_eta",
    "run_online",
    "run_protocol",
    "run_offline",
    "forward_backward",
]

LossFn = Callable[[float, int], float]


def theoretical_eta(B: float, sigma: float, n: int, delta: float = 0.1) -> float:
    """Learning rate ``1 / (8 (B + sigma sqrt(log(2n/delta)))**2)``."""
    if not B > 0:
        raise DomainError(f"B must be positive, got {B}")
    if sigma < 0:
        raise DomainError(f"sigma must be non-negative, got {sigma}")
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if not 0 < delta < 1:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    return 1.0 / (8.0 * (B + sigma * math.sqrt(math.log(2 * n / delta))) ** 2)


def offline_eta(y: Sequence[float]) -> float:
    """Learning rate ``1 / (8 max|y|**2)`` for a fully observed sequence."""
    if len(y) == 0:
        raise DomainError("offline_eta needs at least one observation")
    nu = float(np.max(np.abs(np.asarray(y, dtype=float))))
    if nu == 0:
        raise DomainError("offline_eta is undefined for an all-zero sequence")
    return 1.0 / (8.0 * nu * nu)


@dataclass
class AligatorConfig:
    """Parameters of one ALIGATOR instance.

    ``clip_bound=None`` clips expert predictions to the largest ``|y|`` seen so
    far.  ``eta`` may be left unset when a custom loss is supplied to the state.
    ``forecast_clip`` bounds extrapolated forecasts; it defaults to no clipping
    because a trend forecast has to be allowed to leave the observed range.
    """

    n: int
    eta: float | None = None
    expert_kind: str | int = "average"
    clip_bound: float | None = None
    seed: int = 0
    ridge: float = 1e-8
    forecast_clip: float = math.inf

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError(f"horizon n must be >= 1, got {self.n}")
        if self.eta is not None and not self.eta > 0:
            raise ConfigError(f"eta must be positive, got {self.eta}")
        if self.clip_bound is not None and not self.clip_bound > 0:
            raise ConfigError(f"clip_bound must be positive, got {self.clip_bound}")


@dataclass(frozen=True)
class RoundDetail:
    """Per-round internals, recorded only when a run asks for them."""

    index: int
    prediction: float
    observation: float
    awake: tuple
    weights: tuple
    expert_predictions: tuple
    losses: tuple

    def weight_map(self) -> dict:
        return dict(zip(self.awake, self.weights))

    def loss_map(self) -> dict:
        return dict(zip(self.awake, self.losses))


@dataclass
class RunTrace:
    indices: list = field(default_factory=list)
    predictions: list = field(default_factory=list)
    observations: list = field(default_factory=list)
    truth: list | None = None
    rounds: list | None = None

    def __len__(self):
        return len(self.predictions)

    def squared_errors(self) -> np.ndarray:
        """``(yhat_t - theta_t)**2``, or against the observations without truth."""
        target = self.truth if self.truth is not None else self.observations
        return (np.asarray(self.predictions) - np.asarray(target, dtype=float)) ** 2

    def cumulative_error(self) -> np.ndarray:
        return np.cumsum(self.squared_errors())

    @property
    def total_error(self) -> float:
        return float(np.sum(self.squared_errors()))

    def observation_loss(self) -> float:
        """Cumulative squared loss against the observations."""
        diff = np.asarray(self.predictions) - np.asarray(self.observations)
        return float(diff @ diff)


class AligatorState:
    """Single-stream ALIGATOR learner driven by alternating ``step``/``feed``.

    Parameters
    ----------
    config : AligatorConfig
    loss_fn : callable, optional
        ``loss_fn(raw_squared_loss, m)`` replaces ``eta * raw_squared_loss``;
        ``m`` is the number of observations the expert has absorbed.
    record : bool
        Keep a ``RoundDetail`` for every round in ``self.rounds``.
    """

    def __init__(self, config: AligatorConfig, loss_fn: LossFn | None = None,
                 record: bool = False):
        if config.eta is None and loss_fn is None:
            raise ConfigError("either config.eta or a loss_fn is required")
        self.config = config
        self.loss_fn = loss_fn
        self.index_set = CoverIndex(config.n)
        self.pool = SpecialistPool(self.index_set, check_keys=False)
        # _levels[k][j] holds (interval, expert) for [j * 2**k, (j+1) * 2**k - 1]
        depth = (config.n + 1).bit_length() - 1
        self._levels = [[None] * ((config.n >> k) + 1) for k in range(depth)]
        self.t = 0
        self.pending = None
        self.touches = 0
        self.max_abs_y = 0.0
        self.last_index: int | None = None
        self.rounds: list[RoundDetail] | None = [] if record else None
        kind = config.expert_kind
        self._averaging = kind in ("average", "running-average", "mean")
        if not self._averaging:
            make_expert(kind, 1, 1, config.ridge)  # validate early

    def _awake(self, i: int) -> tuple[list[DyadicInterval], list]:
        """Awake intervals for index ``i`` and their experts, created lazily."""
        n = self.config.n
        keys, experts = [], []
        k = 0
        for level in self._levels:
            j = i >> k
            slot = level[j]
            if slot is None:
                start = j << k
                if start == 0 or start + (1 << k) - 1 > n:
                    break
                slot = level[j] = self._new_slot(start, k)
            keys.append(slot[0])
            experts.append(slot[1])
            k += 1
        return keys, experts

    def _new_slot(self, start: int, k: int) -> tuple:
        if self._averaging:
            expert = RunningAverageExpert()
        else:
            expert = make_expert(self.config.expert_kind, start, 1 << k,
                                 self.config.ridge)
        return _interval(start, k), expert

    @property
    def experts(self) -> dict:
        """Instantiated experts keyed by their interval."""
        return {slot[0]: slot[1] for level in self._levels
                for slot in level if slot is not None}

    def _bound(self) -> float:
        bound = self.config.clip_bound
        return self.max_abs_y if bound is None else bound

    def _predictions(self, experts, i: int) -> list[float]:
        if self._averaging and self.config.clip_bound is None:
            # A running mean never leaves the range of what it has seen.
            return [e.sum / e.count if e.count else 0.0 for e in experts]
        bound = self._bound()
        return [e.predict(i, bound) for e in experts]

    def step(self, i: int) -> float:
        """Predict the value at index ``i``."""
        if self.pending is not None:
            raise ProtocolError("step called twice without feed")
        if not 1 <= i <= self.config.n:
            raise DomainError(f"index {i} outside [1, {self.config.n}]")
        keys, experts = self._awake(i)
        preds = self._predictions(experts, i)
        weights = self.pool.weight_list(keys)
        yhat = sum([w * p for w, p in zip(weights, preds)])
        self.touches += len(keys)
        self.pending = (i, yhat, keys, experts, preds, weights)
        return yhat

    def feed(self, y: float) -> None:
        """Reveal the observation for the pending query."""
        if self.pending is None:
            raise ProtocolError("feed called without a pending step")
        y = float(y)
        if not math.isfinite(y):
            raise DomainError(f"observation must be finite, got {y}")
        i, yhat, keys, experts, preds, weights = self.pending
        if self.loss_fn is None:
            eta = self.config.eta
            losses = [eta * (y - p) * (y - p) for p in preds]
        else:
            fn = self.loss_fn
            losses = [fn((y - p) * (y - p), e.count) for p, e in zip(preds, experts)]
        self.pool.update_list(keys, losses, weights)
        if self._averaging:
            for e in experts:
                e.sum += y
                e.count += 1
        else:
            for e in experts:
                e.observe(i, y)
        if abs(y) > self.max_abs_y:
            self.max_abs_y = abs(y)
        if self.rounds is not None:
            self.rounds.append(RoundDetail(i, yhat, y, tuple(keys), tuple(weights),
                                           tuple(preds), tuple(losses)))
        self.pending = None
        self.last_index = i
        self.t += 1

    def forecast(self, h: int, clip_bound: float | None = None) -> np.ndarray:
        """Aggregate the awake experts' extrapolations ``1..h`` steps ahead."""
        if h < 1:
            raise DomainError(f"forecast horizon must be >= 1, got {h}")
        if self.last_index is None:
            return np.zeros(h)
        t = self.last_index
        bound = self.config.forecast_clip if clip_bound is None else clip_bound
        keys, experts = self._awake(t)
        weights = self.pool.weight_list(keys)
        out = np.empty(h)
        for j in range(1, h + 1):
            out[j - 1] = math.fsum([w * e.extrapolate(t + j, bound)
                                    for w, e in zip(weights, experts)])
        return out


def run_protocol(learner, indices: Sequence[int], ys: Sequence[float],
                 truth: Sequence[float] | None = None) -> RunTrace:
    """Alternate ``step``/``feed`` on any learner exposing them.

    ``truth`` is aligned with rounds: ``truth[t]`` is the noiseless value at
    the index queried in round ``t``.
    """
    if len(indices) != len(ys):
        raise DomainError("indices and observations differ in length")
    if truth is not None and len(truth) != len(ys):
        raise DomainError("truth and observations differ in length")
    indices = [int(i) for i in indices]
    ys = [float(y) for y in ys]
    preds = []
    step, feed = learner.step, learner.feed
    for i, y in zip(indices, ys):
        preds.append(step(i))
        feed(y)
    return RunTrace(indices, preds, ys,
                    None if truth is None else [float(v) for v in truth],
                    getattr(learner, "rounds", None))


def run_online(config: AligatorConfig, indices: Sequence[int], ys: Sequence[float],
               truth: Sequence[float] | None = None, loss_fn: LossFn | None = None,
               record: bool = False) -> RunTrace:
    """Play the online protocol with a fresh ALIGATOR instance."""
    return run_protocol(AligatorState(config, loss_fn, record), indices, ys, truth)


@dataclass
class OfflineResult:
    estimates: np.ndarray
    forward: RunTrace
    backward: RunTrace
    truth: np.ndarray | None = None

    @property
    def total_error(self) -> float:
        """Cumulative squared error of the averaged estimate against the truth."""
        if self.truth is None:
            raise DomainError("no ground truth was supplied")
        diff = self.estimates - self.truth
        return float(diff @ diff)


def forward_backward(make_learner: Callable[[], object], ys: Sequence[float],
                     truth: Sequence[float] | None = None) -> OfflineResult:
    """Run a learner once over ``1..n`` and once over ``n..1`` and average."""
    ys = np.asarray(ys, dtype=float)
    n = len(ys)
    if n == 0:
        raise DomainError("need at least one observation")
    forward_idx = np.arange(1, n + 1)
    backward_idx = forward_idx[::-1]
    truth_arr = None if truth is None else np.asarray(truth, dtype=float)
    fwd = run_protocol(make_learner(), forward_idx, ys,
                       None if truth_arr is None else truth_arr)
    bwd = run_protocol(make_learner(), backward_idx, ys[::-1],
                       None if truth_arr is None else truth_arr[::-1])
    estimates = 0.5 * (np.asarray(fwd.predictions) + np.asarray(bwd.predictions)[::-1])
    return OfflineResult(estimates, fwd, bwd, truth_arr)


def run_offline(config: AligatorConfig | None, ys: Sequence[float],
                truth: Sequence[float] | None = None,
                loss_fn: LossFn | None = None) -> OfflineResult:
    """Forward-backward averaged ALIGATOR estimate of a fully observed sequence.

    When ``config`` is None, or its ``eta`` is unset and no ``loss_fn`` is
    given, ``eta`` is taken from :func:`offline_eta` (``1/8`` for all-zero
    data).
    """
    ys = np.asarray(ys, dtype=float)
    if config is None:
        config = AligatorConfig(n=len(ys))
    if config.n != len(ys):
        raise DomainError(f"config horizon {config.n} != {len(ys)} observations")
    if config.eta is None and loss_fn is None:
        eta = offline_eta(ys) if np.any(ys) else 0.125  # all-zero data: nu = 1
        config = replace(config, eta=eta)
    return forward_backward(lambda: AligatorState(config, loss_fn), ys, truth)
