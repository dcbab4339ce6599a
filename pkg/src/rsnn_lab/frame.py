"""Frames of discernment, focal sets, and budgets.

Classes live at fixed indices in a frame; a set of classes is a bit mask over
those indices (hence the hard cap of 64 classes). A budget is the ordered list
of focal sets an algorithm is allowed to assign mass to.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .errors import (
    DuplicateLabel,
    EmptySet,
    OutOfRange,
    PowersetTooLarge,
    TooManyClasses,
    UnknownLabel,
)

MAX_CLASSES = 64
# enumerate_subsets refuses to materialize more than this many sets
MAX_ENUMERATION = 1 << 20


@dataclass(frozen=True)
class Frame:
    labels: tuple[str, ...]

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def full_mask(self) -> int:
        return (1 << self.n) - 1

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise UnknownLabel(f"label {label!r} not in frame") from None


def make_frame(labels: Sequence[str]) -> Frame:
    labels = tuple(labels)
    if not labels:
        raise EmptySet("frame needs at least one label")
    if len(labels) > MAX_CLASSES:
        raise TooManyClasses(f"{len(labels)} labels exceed the {MAX_CLASSES}-class cap")
    if len(set(labels)) != len(labels):
        seen: set[str] = set()
        for label in labels:
            if label in seen:
                raise DuplicateLabel(f"label {label!r} appears more than once")
            seen.add(label)
    return Frame(labels)


@dataclass(frozen=True, order=True)
class FocalSet:
    """Non-empty subset of a frame, stored as a bit mask ordered by (cardinality, bits)."""

    sort_index: tuple[int, int] = field(init=False, repr=False)
    bits: int
    n: int

    def __post_init__(self) -> None:
        if self.bits == 0:
            raise EmptySet("focal sets are non-empty")
        if not 1 <= self.n <= MAX_CLASSES:
            raise TooManyClasses(f"frame size {self.n} outside 1..{MAX_CLASSES}")
        if self.bits >> self.n:
            raise OutOfRange(f"bits {self.bits:#x} outside frame of {self.n} classes")
        object.__setattr__(self, "sort_index", (self.cardinality, self.bits))

    @property
    def cardinality(self) -> int:
        return self.bits.bit_count()

    @classmethod
    def from_indices(cls, indices: Sequence[int], n: int) -> "FocalSet":
        bits = 0
        for i in indices:
            if not 0 <= i < n:
                raise OutOfRange(f"class index {i} outside 0..{n - 1}")
            bits |= 1 << i
        return cls(bits, n)

    @classmethod
    def universal(cls, n: int) -> "FocalSet":
        return cls((1 << n) - 1, n)

    def indices(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.n) if self.bits >> i & 1)

    def contains(self, class_index: int) -> bool:
        return bool(self.bits >> class_index & 1)

    def issubset(self, other: "FocalSet") -> bool:
        return self.bits & ~other.bits == 0

    def members(self, frame: Frame) -> tuple[str, ...]:
        if frame.n != self.n:
            raise OutOfRange("focal set built for a different frame size")
        return tuple(frame.labels[i] for i in self.indices())


def encode_set(frame: Frame, members: Sequence[str]) -> FocalSet:
    if not members:
        raise EmptySet("cannot encode an empty selection")
    bits = 0
    for label in members:
        bits |= 1 << frame.index(label)
    return FocalSet(bits, frame.n)


def decode_set(frame: Frame, focal: FocalSet) -> tuple[str, ...]:
    return focal.members(frame)


def _count_subsets(n: int, max_cardinality: int) -> int:
    return sum(math.comb(n, k) for k in range(1, max_cardinality + 1))


def _gosper(n: int, cardinality: int) -> Iterator[int]:
    """All n-bit masks with the given popcount, in increasing numeric order."""
    x = (1 << cardinality) - 1
    limit = 1 << n
    while x < limit:
        yield x
        u = x & -x
        v = x + u
        x = v | (((x ^ v) // u) >> 2)


def enumerate_subsets(frame: Frame, max_cardinality: int | None = None) -> list[FocalSet]:
    """Non-empty subsets up to the cardinality cap, in (cardinality, bits) order."""
    n = frame.n
    cap = n if max_cardinality is None else min(max_cardinality, n)
    if cap < 1:
        raise EmptySet("max_cardinality below 1 enumerates nothing")
    total = _count_subsets(n, cap)
    if total > MAX_ENUMERATION:
        raise PowersetTooLarge(
            f"{total} subsets for n={n}, max_cardinality={cap} exceed the enumeration guard"
        )
    return [FocalSet(bits, n) for c in range(1, cap + 1) for bits in _gosper(n, c)]


@dataclass(frozen=True)
class Budget:
    """Ordered, duplicate-free collection of focal sets over one frame."""

    sets: tuple[FocalSet, ...]

    def __post_init__(self) -> None:
        if not self.sets:
            raise EmptySet("budget needs at least one focal set")
        n = self.sets[0].n
        seen: set[int] = set()
        for fs in self.sets:
            if fs.n != n:
                raise OutOfRange("budget mixes focal sets from different frame sizes")
            if fs.bits in seen:
                raise DuplicateLabel(f"duplicate focal set {fs.bits:#x} in budget")
            seen.add(fs.bits)

    @property
    def n(self) -> int:
        return self.sets[0].n

    @property
    def size(self) -> int:
        return len(self.sets)

    @property
    def contains_all_singletons(self) -> bool:
        singleton_bits = {fs.bits for fs in self.sets if fs.cardinality == 1}
        return len(singleton_bits) == self.n

    def __iter__(self) -> Iterator[FocalSet]:
        return iter(self.sets)

    def __len__(self) -> int:
        return len(self.sets)

    def index_of(self, focal: FocalSet) -> int:
        for i, fs in enumerate(self.sets):
            if fs.bits == focal.bits:
                return i
        raise OutOfRange(f"focal set {focal.bits:#x} not in budget")

    def position(self, bits: int) -> int | None:
        for i, fs in enumerate(self.sets):
            if fs.bits == bits:
                return i
        return None

    def with_universal(self) -> tuple["Budget", int]:
        """Budget guaranteed to contain the universal set, plus its position."""
        universal = FocalSet.universal(self.n)
        pos = self.position(universal.bits)
        if pos is not None:
            return self, pos
        return Budget(self.sets + (universal,)), len(self.sets)

    def bits_array(self) -> np.ndarray:
        return np.array([fs.bits for fs in self.sets], dtype=np.uint64)

    def cardinalities(self) -> np.ndarray:
        return np.array([fs.cardinality for fs in self.sets], dtype=np.int64)


def singleton_budget(frame: Frame) -> Budget:
    return Budget(tuple(FocalSet(1 << i, frame.n) for i in range(frame.n)))


def powerset_budget(frame: Frame) -> Budget:
    return Budget(tuple(enumerate_subsets(frame)))


def subset_matrix(budget: Budget) -> np.ndarray:
    """Boolean matrix S with S[i, j] true iff budget set j ⊆ budget set i."""
    bits = budget.bits_array()
    return (bits[None, :] & ~bits[:, None]) == 0


def containment_matrix(budget: Budget) -> np.ndarray:
    """Boolean matrix C with C[i, c] true iff class c is a member of budget set i."""
    bits = budget.bits_array()
    classes = np.uint64(1) << np.arange(budget.n, dtype=np.uint64)
    return (bits[:, None] & classes[None, :]) != 0
