"""Dyadic geometric cover of the positive integers.

Level ``k`` of the cover holds the intervals ``[i * 2**k, (i + 1) * 2**k - 1]``
for ``i >= 1``.  Every time index ``t`` lies in exactly
``floor(log2 t) + 1`` of them, which is what keeps the per-round work of the
aggregation logarithmic.
"""
from __future__ import annotations

from collections import namedtuple
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

from .errors import DomainError

__all__ = [
    "DyadicInterval",
    "CoverPartition",
    "CoverIndex",
    "awake_set",
    "awake_count_unrestricted",
    "partition",
    "is_cover_element",
]


class DyadicInterval(namedtuple("DyadicInterval", "start k")):
    """Closed integer interval ``[start, start + 2**k - 1]`` with ``2**k | start``.

    A tuple subclass so that intervals hash and compare at C speed; they are
    used as expert keys on every round.
    """

    __slots__ = ()

    def __new__(cls, start: int, k: int):
        if k < 0:
            raise DomainError(f"length exponent must be >= 0, got {k}")
        if start < 1 or start % (1 << k):
            raise DomainError(f"start {start} is not a positive multiple of 2**{k}")
        return tuple.__new__(cls, (start, k))

    @property
    def length(self) -> int:
        return 1 << self.k

    @property
    def end(self) -> int:
        return self.start + (1 << self.k) - 1

    def contains(self, t: int) -> bool:
        return self.start <= t <= self.end

    def __repr__(self):
        return f"[{self.start},{self.end}]"

    @classmethod
    def from_bounds(cls, a: int, b: int) -> "DyadicInterval":
        if not is_cover_element(a, b):
            raise DomainError(f"[{a},{b}] is not a geometric cover element")
        return cls(a, (b - a + 1).bit_length() - 1)


def _interval(start: int, k: int) -> DyadicInterval:
    # Unchecked constructor for bounds produced by this module.
    return tuple.__new__(DyadicInterval, (start, k))


class CoverPartition(NamedTuple):
    """Tiling of ``[q, s]`` as a run of growing lengths followed by a run of
    shrinking lengths.  ``left_run`` ends with the anchor interval."""

    left_run: tuple[DyadicInterval, ...]
    right_run: tuple[DyadicInterval, ...]

    @property
    def intervals(self) -> tuple[DyadicInterval, ...]:
        return self.left_run + self.right_run

    def __len__(self):
        return len(self.left_run) + len(self.right_run)


def is_cover_element(a: int, b: int) -> bool:
    """True iff ``[a, b]`` belongs to the geometric cover."""
    length = b - a + 1
    if length < 1 or a < 1:
        return False
    if length & (length - 1):
        return False
    return a % length == 0


def awake_count_unrestricted(t: int) -> int:
    """Number of cover elements containing ``t`` when no horizon is imposed."""
    if t < 1:
        raise DomainError(f"time index must be >= 1, got {t}")
    return t.bit_length()


def _awake_bounds(t: int, n: int) -> Iterator[tuple[int, int]]:
    # Intervals containing t are nested, so once one overhangs n every longer
    # one does too.
    k = 0
    while True:
        start = (t >> k) << k
        if start == 0 or start + (1 << k) - 1 > n:
            return
        yield start, k
        k += 1


def awake_set(t: int, n: int) -> list[DyadicInterval]:
    """Cover elements inside ``[1, n]`` that contain ``t``, shortest first."""
    if not 1 <= t <= n:
        raise DomainError(f"time index {t} outside [1, {n}]")
    return [_interval(start, k) for start, k in _awake_bounds(t, n)]


def _longest_inside(q: int, s: int) -> DyadicInterval:
    k = (s - q + 1).bit_length() - 1
    while k >= 0:
        size = 1 << k
        start = max(-(-q // size) * size, size)
        if start + size - 1 <= s:
            return DyadicInterval(start, k)
        k -= 1
    raise AssertionError("unreachable: [q, q] is always a cover element")


def partition(q: int, s: int, n: int) -> CoverPartition:
    """Tile ``[q, s]`` with cover elements whose lengths at least halve moving
    away from a central anchor.

    The anchor is the longest cover element inside ``[q, s]`` (leftmost on
    ties).  The remainder on each side is then consumed greedily, always taking
    the longest cover element that still fits.  Left of the anchor this is the
    binary expansion of the leftover length taken from its top bit, so lengths
    strictly decrease outward; the same holds on the right, where the first
    piece may equal the anchor in length.
    """
    if not 1 <= q <= s <= n:
        raise DomainError(f"need 1 <= q <= s <= n, got q={q}, s={s}, n={n}")
    anchor = _longest_inside(q, s)

    left: list[DyadicInterval] = [anchor]
    end = anchor.start - 1
    while end >= q:
        remaining = end - q + 1
        k = remaining.bit_length() - 1
        while (end + 1) % (1 << k):
            k -= 1
        left.append(DyadicInterval(end + 1 - (1 << k), k))
        end -= 1 << k
    left.reverse()

    right: list[DyadicInterval] = []
    start = anchor.end + 1
    while start <= s:
        remaining = s - start + 1
        k = remaining.bit_length() - 1
        while start % (1 << k):
            k -= 1
        right.append(DyadicInterval(start, k))
        start += 1 << k
    return CoverPartition(tuple(left), tuple(right))


@dataclass(frozen=True)
class CoverIndex:
    """The set of cover elements contained in ``[1, n]``.

    Supports ``len``, membership and lazy level-by-level iteration without
    materialising the O(n) elements.
    """

    n: int
    _size: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n < 1:
            raise DomainError(f"horizon must be >= 1, got {self.n}")
        size = 0
        k = 0
        while (2 << k) - 1 <= self.n:
            size += (self.n + 1) // (1 << k) - 1
            k += 1
        object.__setattr__(self, "_size", size)

    def __len__(self):
        return self._size

    def __contains__(self, item) -> bool:
        if not isinstance(item, DyadicInterval):
            return False
        return item.end <= self.n

    def __iter__(self) -> Iterator[DyadicInterval]:
        k = 0
        while (2 << k) - 1 <= self.n:
            size = 1 << k
            for i in range(1, (self.n + 1) // size):
                yield _interval(i * size, k)
            k += 1
