"""Drivers shared by the command line: index orders, offline estimation,
rolling-origin forecasting and rate studies."""
from __future__ import annotations

import warnings
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .baselines import (holt_fit, holt_forecast, holt_levels, mad_sigma,
                        running_mean_predictions, wavelet_denoise)
from .core import (AligatorConfig, AligatorState, run_offline,
                   run_protocol, theoretical_eta)
from .errors import ConfigError, DomainError
from .signals import add_noise, make_signal
from .variants import (HedgedAligator, aligned_indices, HeuristicLoss, data_driven_eta,
                       expert_one_step_losses, hedged_forecast, run_hedged_offline,
                       run_heuristic_offline)

__all__ = [
    "ALGORITHMS",
    "INDEX_ORDERS",
    "index_sequence",
    "offline_estimate",
    "online_learner",
    "ForecastOrigin",
    "rolling_forecast",
    "BenchResult",
    "rate_study",
    "loglog_slope",
    "trial_seed",
]

ALGORITHMS = ("aligator", "aligator-hedged", "aligator-heuristic", "wavelet", "holt")
ONLINE_ALGORITHMS = ("aligator", "aligator-hedged", "aligator-heuristic")
INDEX_ORDERS = ("isotonic", "reverse", "random-permutation", "iid-uniform")

# Index orders draw from their own stream so that changing the order never
# changes the noise realisation for a given seed.
INDEX_STREAM_TAG = 0x5DEECE66D


def _check_algorithm(name: str, allowed: Sequence[str] = ALGORITHMS) -> None:
    if name not in allowed:
        raise ConfigError(f"unknown algorithm {name!r}; choose from {', '.join(allowed)}")


def index_sequence(order: str, n: int, seed: int = 0) -> np.ndarray:
    """Query indices ``i_1..i_n`` in ``[1, n]`` for a named adversary order."""
    if n < 1:
        raise ConfigError(f"n must be >= 1, got {n}")
    if order == "isotonic":
        return np.arange(1, n + 1)
    if order == "reverse":
        return np.arange(n, 0, -1)
    rng = np.random.default_rng(seed ^ INDEX_STREAM_TAG)
    if order == "random-permutation":
        return rng.permutation(n) + 1
    if order == "iid-uniform":
        return rng.integers(1, n + 1, size=n)
    raise ConfigError(f"unknown index order {order!r}; choose from {', '.join(INDEX_ORDERS)}")


def offline_estimate(y: Sequence[float], algorithm: str = "aligator",
                     sigma: float | None = None, eta: float | None = None,
                     expert_kind="average", alpha: float = 0.5,
                     beta: float = 0.3) -> np.ndarray:
    """Estimate of the underlying trend from a fully observed sequence.

    ALIGATOR variants use forward-backward averaging; ``eta`` defaults to the
    offline rate.  The heuristic variant and the wavelet baseline estimate
    ``sigma`` with the MAD rule when it is not supplied.
    """
    _check_algorithm(algorithm)
    y = np.asarray(y, dtype=float)
    if algorithm == "aligator":
        return run_offline(AligatorConfig(n=len(y), eta=eta, expert_kind=expert_kind),
                           y).estimates
    if algorithm == "aligator-hedged":
        return run_hedged_offline(y, base_eta=eta, expert_kind=expert_kind).estimates
    if algorithm == "aligator-heuristic":
        s = mad_sigma(y) if sigma is None else sigma
        if not s > 0:
            # noiseless data: any positive scale gives the same ranking
            s = 1.0
        return run_heuristic_offline(y, s, expert_kind=expert_kind).estimates
    if algorithm == "wavelet":
        return wavelet_denoise(y, sigma)
    return holt_levels(y, alpha, beta)


def online_learner(algorithm: str, n: int, bound: float, sigma: float,
                   eta: float | None = None, delta: float = 0.1,
                   expert_kind="average"):
    """A fresh learner for the online protocol.

    Without ``eta`` the rate is the high-probability one computed from the
    signal bound and noise level.
    """
    _check_algorithm(algorithm, ONLINE_ALGORITHMS)
    if algorithm == "aligator-heuristic":
        if not sigma > 0:
            raise ConfigError("the heuristic variant needs sigma > 0")
        return AligatorState(AligatorConfig(n=n, expert_kind=expert_kind), HeuristicLoss(sigma))
    if eta is None:
        eta = theoretical_eta(max(bound, 1e-12), sigma, n, delta)
    if algorithm == "aligator":
        return AligatorState(AligatorConfig(n=n, eta=eta, expert_kind=expert_kind))
    return HedgedAligator.from_rates(n, eta, eta, expert_kind=expert_kind)


@dataclass(frozen=True)
class ForecastOrigin:
    """Forecast issued after observing ``y[:origin]`` (0-based, exclusive)."""

    origin: int
    forecasts: np.ndarray
    actual: np.ndarray

    @property
    def rmse(self) -> float:
        diff = self.forecasts - self.actual
        return float(np.sqrt(np.mean(diff * diff)))


def _aligator_forecast(window: np.ndarray, h: int, expert_kind) -> np.ndarray:
    # same centering and index alignment as hedged_forecast
    offset = float(window.mean())
    window = window - offset
    n, indices = aligned_indices(len(window))
    try:
        eta = data_driven_eta(expert_one_step_losses(window, expert_kind, indices, n))
    except DomainError:
        eta = 0.125
    state = AligatorState(AligatorConfig(n=n, eta=eta, expert_kind=expert_kind))
    run_protocol(state, indices, window)
    return state.forecast(h) + offset


def forecast_window(window: Sequence[float], h: int, algorithm: str = "aligator-hedged",
                    expert_kind=1, alpha: float = 0.5, beta: float = 0.3) -> np.ndarray:
    """Train on ``window`` and forecast the next ``h`` values."""
    window = np.asarray(window, dtype=float)
    if algorithm == "aligator-hedged":
        return hedged_forecast(window, h, expert_kind)
    if algorithm == "aligator":
        return _aligator_forecast(window, h, expert_kind)
    if algorithm == "holt":
        return holt_forecast(holt_fit(window, alpha, beta), h)
    raise ConfigError(f"algorithm {algorithm!r} cannot forecast; "
                      "use aligator, aligator-hedged or holt")


def rolling_forecast(y: Sequence[float], window: int, horizon: int,
                     algorithm: str = "aligator-hedged", stride: int = 1,
                     start: int | None = None, expert_kind=1,
                     alpha: float = 0.5, beta: float = 0.3) -> list[ForecastOrigin]:
    """Rolling-origin evaluation over origins ``start, start + stride, ...``.

    Origin ``t`` (0-based) trains on ``y[t - window:t]`` and is scored on
    ``y[t:t + horizon]``.  Origins with less than ``window`` values of history
    are skipped with a warning.
    """
    y = np.asarray(y, dtype=float)
    if window < 2:
        raise ConfigError(f"window must be >= 2, got {window}")
    if horizon < 1:
        raise ConfigError(f"horizon must be >= 1, got {horizon}")
    if stride < 1:
        raise ConfigError(f"stride must be >= 1, got {stride}")
    first = window if start is None else start
    if first < window:
        warnings.warn(f"origins before {window} lack a full training window; skipped",
                      stacklevel=2)
        first = window
    last = len(y) - horizon
    if first > last:
        warnings.warn("no origin has both a full window and a full horizon", stacklevel=2)
        return []
    results = []
    for t in range(first, last + 1, stride):
        forecasts = forecast_window(y[t - window:t], horizon, algorithm, expert_kind,
                                    alpha, beta)
        results.append(ForecastOrigin(t, np.asarray(forecasts, dtype=float),
                                      y[t:t + horizon].copy()))
    return results


def trial_seed(seed: int, trial: int, n: int) -> int:
    """Independent noise seed for one (trial, length) cell of a study."""
    return int(np.random.SeedSequence([seed, trial, n]).generate_state(1, np.uint64)[0])


def loglog_slope(ns: Sequence[int], errors: Sequence[float]) -> float | None:
    """Least-squares slope of ``log error`` on ``log n``; None when undefined."""
    errors = np.asarray(errors, dtype=float)
    if len(ns) < 2 or not np.all(np.isfinite(errors)) or np.any(errors <= 1e-12):
        return None
    return float(np.polyfit(np.log(ns), np.log(errors), 1)[0])


@dataclass
class BenchResult:
    rows: list = field(default_factory=list)  # (algorithm, n, mean, std)
    slopes: dict = field(default_factory=dict)

    def means(self, algorithm: str) -> list[float]:
        return [mean for alg, _, mean, _ in self.rows if alg == algorithm]


def cumulative_error(algorithm: str, y: np.ndarray, truth: np.ndarray, sigma: float,
                     mode: str = "offline", expert_kind="average") -> float:
    """Cumulative squared error of one method against the ground truth."""
    if algorithm == "running-mean":
        estimate = running_mean_predictions(y)
    elif mode == "offline":
        estimate = offline_estimate(y, algorithm, sigma if sigma > 0 else None,
                                    expert_kind=expert_kind)
    elif mode == "online":
        learner = online_learner(algorithm, len(y), float(np.max(np.abs(truth))), sigma,
                                 expert_kind=expert_kind)
        estimate = np.asarray(run_protocol(learner, range(1, len(y) + 1), y).predictions)
    else:
        raise ConfigError(f"unknown mode {mode!r}; choose offline or online")
    diff = estimate - truth
    return float(diff @ diff)


def rate_study(signal: str, ns: Sequence[int], sigma: float, trials: int = 5,
               algorithms: Sequence[str] = ("aligator",), seed: int = 0,
               mode: str = "offline", amplitude_scale: float | None = None,
               expert_kind="average") -> BenchResult:
    """Mean cumulative squared error per (algorithm, n) over seeded trials.

    ``algorithms`` may include ``"running-mean"``, the global mean of all
    earlier observations, as a non-adaptive reference.
    """
    if trials < 1:
        raise ConfigError(f"trials must be >= 1, got {trials}")
    for alg in algorithms:
        if alg != "running-mean":
            _check_algorithm(alg)
    result = BenchResult()
    for alg in algorithms:
        means = []
        for n in ns:
            sig = make_signal(signal, n, amplitude_scale)
            errors = [cumulative_error(alg, add_noise(sig, sigma, trial_seed(seed, k, n)),
                                       sig.values, sigma, mode, expert_kind)
                      for k in range(trials)]
            mean = float(np.mean(errors))
            std = float(np.std(errors, ddof=1)) if trials > 1 else 0.0
            result.rows.append((alg, int(n), mean, std))
            means.append(mean)
        result.slopes[alg] = loglog_slope(list(ns), means)
    return result
