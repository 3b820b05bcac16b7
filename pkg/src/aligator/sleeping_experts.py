"""Specialist aggregation over sleeping experts.

Each round a subset of experts is awake.  The learner plays the normalised
restriction of the unnormalised weights ``u`` to that subset, receives one
loss per awake expert and multiplies the awake weights by ``exp(-loss)``,
rescaling so that the awake mass is unchanged.  Sleeping weights are left
alone, so the total mass is conserved.

Against any single expert ``j`` the cumulative mixloss regret over the rounds
where ``j`` is awake never exceeds ``log K`` for a pool of size ``K``.

Weights are stored as logarithms; ``exp(-loss)`` underflows for losses above
roughly 745 in double precision and long runs compound that.
"""
from __future__ import annotations

import math
from collections.abc import Collection, Hashable, Iterable, Mapping, Sequence
from dataclasses import dataclass

from .errors import DomainError, NumericalError

__all__ = [
    "SpecialistPool",
    "RoundRecord",
    "init",
    "weights",
    "update",
    "mixloss",
    "regret_certificate",
]

_NEG_INF = -math.inf


def _logsumexp(values: Sequence[float]) -> float:
    top = max(values)
    if top == _NEG_INF:
        return _NEG_INF
    return top + math.log(math.fsum([math.exp(v - top) for v in values]))


@dataclass(frozen=True)
class RoundRecord:
    """What happened in one round of the sleeping-experts game."""

    awake: tuple
    weights: dict
    losses: dict
    mixloss: float


class SpecialistPool:
    """Unnormalised weights over an index set of expert keys.

    ``index_set`` may be any sized collection that supports membership tests;
    weights of keys that have never been awake are implicit (``1/|S|``), so a
    pool over a very large lazily-described index set costs memory only for the
    experts actually touched.

    Parameters
    ----------
    index_set : Collection
        Expert keys.  Must be non-empty.
    check_keys : bool
        Validate that awake keys belong to ``index_set`` on every call.  The
        aggregation driver turns this off because it only ever generates valid
        keys.
    """

    def __init__(self, index_set: Collection, check_keys: bool = True):
        size = len(index_set)
        if size == 0:
            raise DomainError("index set must be non-empty")
        self.index_set = index_set
        self.size = size
        self.round = 1
        self.check_keys = check_keys
        self._log_init = -math.log(size)
        self._log_u: dict = {}
        self._last: tuple = (None, None)

    # -- inspection -------------------------------------------------------
    def log_weight(self, key: Hashable) -> float:
        return self._log_u.get(key, self._log_init)

    @property
    def u(self) -> dict:
        """Unnormalised weights of every key (materialises the index set)."""
        return {key: math.exp(self.log_weight(key)) for key in self.index_set}

    def total_mass(self) -> float:
        """Sum of ``u`` over the whole index set."""
        untouched = self.size - len(self._log_u)
        touched = [v for v in self._log_u.values()]
        return math.fsum([math.exp(v) for v in touched]) + untouched / self.size

    def _check(self, awake: Iterable) -> None:
        if not self.check_keys:
            return
        for key in awake:
            if key not in self.index_set:
                raise DomainError(f"awake key {key!r} is not in the index set")

    # -- the game ---------------------------------------------------------
    def weight_list(self, awake: Sequence) -> list[float]:
        """Normalised weights of ``awake`` in the given order."""
        if not awake:
            raise DomainError("awake set must be non-empty")
        self._check(awake)
        get, default = self._log_u.get, self._log_init
        logs = [get(key, default) for key in awake]
        top = max(logs)
        if top == _NEG_INF:
            raise NumericalError("every awake expert has zero weight")
        scaled = [math.exp(v - top) for v in logs]
        total = sum(scaled)
        self._last = (awake, logs)
        return [v / total for v in scaled]

    def weights(self, awake: Iterable) -> dict:
        awake = list(awake)
        return dict(zip(awake, self.weight_list(awake)))

    def update_list(self, awake: Sequence, losses: Sequence[float],
                    weights: Sequence[float] | None = None) -> None:
        """Multiplicative update of the awake weights, losses given in order.

        ``weights`` may pass the normalised weights already computed for this
        round; the update then needs only the mixloss.
        """
        if len(awake) != len(losses):
            raise DomainError("one loss per awake expert is required")
        if not awake:
            raise DomainError("awake set must be non-empty")
        log_u = self._log_u
        if weights is not None:
            # u_k <- u_k exp(-l_k) / sum_j w_j exp(-l_j): the awake mass is
            # preserved because the w_j are u_j normalised over the awake set.
            low = min(losses)
            total = sum([w * math.exp(low - loss) for w, loss in zip(weights, losses)])
            if total > 0 and low != math.inf:
                mix = low - math.log(total)
                last_awake, logs = self._last
                if last_awake is not awake:
                    get, default = log_u.get, self._log_init
                    logs = [get(key, default) for key in awake]
                for key, v, loss in zip(awake, logs, losses):
                    log_u[key] = v - loss + mix
                self._last = (None, None)
                self.round += 1
                return
        self._check(awake)
        get, default = log_u.get, self._log_init
        logs = [get(key, default) for key in awake]
        shifted = [v - loss for v, loss in zip(logs, losses)]
        after = _logsumexp(shifted)
        if after == _NEG_INF or math.isnan(after):
            raise NumericalError(
                "awake weight mass collapsed: every awake loss is infinite")
        shift = _logsumexp(logs) - after
        for key, v in zip(awake, shifted):
            log_u[key] = v + shift
        self._last = (None, None)
        self.round += 1

    def update(self, awake: Iterable, losses: Mapping) -> None:
        awake = list(awake)
        if set(losses) != set(awake):
            raise DomainError("losses must be keyed exactly by the awake set")
        self.update_list(awake, [losses[key] for key in awake])

    def play(self, awake: Iterable, losses: Mapping) -> RoundRecord:
        """Weights, mixloss and update for one round, returned as a record."""
        awake = tuple(awake)
        w = self.weights(awake)
        record = RoundRecord(awake, w, dict(losses), mixloss(w, losses))
        self.update(awake, losses)
        return record


def init(index_set: Collection) -> SpecialistPool:
    return SpecialistPool(index_set)


def weights(pool: SpecialistPool, awake: Iterable) -> dict:
    return pool.weights(awake)


def update(pool: SpecialistPool, awake: Iterable, losses: Mapping) -> SpecialistPool:
    pool.update(awake, losses)
    return pool


def mixloss(weights: Mapping, losses: Mapping) -> float:
    """``-log(sum_k w_k exp(-loss_k))`` computed stably."""
    terms = [math.log(w) - losses[key] for key, w in weights.items() if w > 0]
    if not terms:
        raise DomainError("weights put no mass on any key")
    return -_logsumexp(terms)


def regret_certificate(trace: Iterable[RoundRecord], j: Hashable) -> float:
    """Cumulative mixloss regret against expert ``j`` over its awake rounds.

    Bounded by ``log K`` for any trace produced by a pool of size ``K``.  Is
    ``-inf`` once ``j`` has suffered an infinite loss.
    """
    total = 0.0
    for record in trace:
        if j in record.losses:
            total += record.mixloss - record.losses[j]
    return total
