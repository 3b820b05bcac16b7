"""Executable forms of the constructive arguments behind the error bound.

Nothing here is used when estimating; these functions serve as test oracles
and diagnostics.
"""
from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

from .errors import DomainError
from .geometric_cover import CoverPartition, is_cover_element

__all__ = ["BinPartition", "lemma3_partition", "lemma3_bound", "verify_proposition1"]


@dataclass(frozen=True)
class BinPartition:
    """Consecutive bins over positions ``1..m`` (1-based, inclusive).

    ``variation[b]`` is the total variation of ``theta`` inside bin ``b`` and
    ``pings[b]`` the sum of ``p`` over it.
    """

    bins: tuple
    variation: tuple
    pings: tuple

    @property
    def M(self) -> int:
        return len(self.bins)

    @property
    def boundaries(self) -> tuple:
        """First position of every bin."""
        return tuple(lo for lo, _ in self.bins)


def lemma3_partition(thetas: Sequence[float], pings: Sequence[int],
                     B: float) -> BinPartition:
    """Greedy binning by accumulated variation against ``B / sqrt(pings)``.

    A bin is extended by position ``i`` unless doing so would push its
    variation, including the jump into ``i``, above ``B / sqrt(pings + p(i))``;
    otherwise ``i`` opens a new bin.
    """
    m = len(thetas)
    if m < 1:
        raise DomainError("need at least one position")
    if len(pings) != m:
        raise DomainError("thetas and pings differ in length")
    if not B > 0:
        raise DomainError(f"B must be positive, got {B}")
    if any(p < 1 for p in pings):
        raise DomainError("every ping count must be >= 1")

    bins, variation, totals = [], [], []
    start, acc_pings, acc_tv = 1, pings[0], 0.0
    for i in range(2, m + 1):
        jump = abs(thetas[i - 1] - thetas[i - 2])
        p = pings[i - 1]
        if acc_tv + jump > B / math.sqrt(acc_pings + p):
            bins.append((start, i - 1))
            variation.append(acc_tv)
            totals.append(acc_pings)
            start, acc_pings, acc_tv = i, p, 0.0
        else:
            acc_pings += p
            acc_tv += jump
    bins.append((start, m))
    variation.append(acc_tv)
    totals.append(acc_pings)
    return BinPartition(tuple(bins), tuple(variation), tuple(totals))


def lemma3_bound(n: int, C_n: float, B: float) -> float:
    """``max(3 n^(1/3) C_n^(2/3) B^(-2/3), 1)``."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if C_n < 0:
        raise DomainError(f"C_n must be non-negative, got {C_n}")
    if not B > 0:
        raise DomainError(f"B must be positive, got {B}")
    return max(3.0 * n ** (1 / 3) * C_n ** (2 / 3) * B ** (-2 / 3), 1.0)


def _bounds(interval) -> tuple[int, int]:
    if hasattr(interval, "end"):
        return interval.start, interval.end
    a, b = interval
    return int(a), int(b)


def verify_proposition1(partition, q: int, s: int) -> tuple[bool, str]:
    """Check that ``partition`` tiles ``[q, s]`` with cover elements whose
    lengths at least halve moving outward from one anchor.

    ``partition`` is a :class:`CoverPartition` (anchor last in ``left_run``) or
    a plain ordered sequence of ``(a, b)`` pairs; for the latter the anchor is
    taken to be the first interval of maximal length.

    Returns
    -------
    (bool, str)
        ``(True, "ok")`` or ``(False, <first violated condition>)``.
    """
    if isinstance(partition, CoverPartition):
        left = [_bounds(iv) for iv in partition.left_run]
        right = [_bounds(iv) for iv in partition.right_run]
        pieces = left + right
    else:
        pieces = [_bounds(iv) for iv in partition]
        if not pieces:
            return False, "empty partition"
        lengths = [b - a + 1 for a, b in pieces]
        split = lengths.index(max(lengths)) + 1
        left, right = pieces[:split], pieces[split:]
    if not left:
        return False, "no anchor interval"

    cursor = q
    for a, b in pieces:
        if a != cursor:
            return False, f"tiling: expected an interval starting at {cursor}, got [{a},{b}]"
        if b < a:
            return False, f"tiling: empty interval [{a},{b}]"
        cursor = b + 1
    if cursor != s + 1:
        return False, f"tiling: intervals end at {cursor - 1}, expected {s}"

    for a, b in pieces:
        if not is_cover_element(a, b):
            return False, f"membership: [{a},{b}] is not a cover element"

    lengths = [b - a + 1 for a, b in left]
    for inner, outer in zip(lengths[::-1], lengths[-2::-1]):
        if 2 * outer > inner:
            return False, f"left ratio: length {outer} exceeds half of {inner}"
    if right:
        # the first interval right of the anchor is unconstrained
        r = [b - a + 1 for a, b in right]
        for inner, outer in zip(r, r[1:]):
            if 2 * outer > inner:
                return False, f"right ratio: length {outer} exceeds half of {inner}"
    return True, "ok"
