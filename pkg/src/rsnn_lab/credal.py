"""Credal sets: convex families of probability vectors and their vertices.

Three routes produce them: exact permutation enumeration from a mass function,
the 2n-permutation approximation of the same rule, and vertex enumeration of
an interval box intersected with the simplex. All three tag their output so a
consumer knows what guarantees it carries.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .belief import MassFunction, belief_of, pignistic
from .errors import (
    EmptyCredalSet,
    LengthMismatch,
    NonOrderedScores,
    NoVertices,
    OutOfRange,
    TooManyClasses,
)
from .frame import FocalSet, containment_matrix

EXACT_VERTEX_MAX_CLASSES = 8
# duplicate vertices are equal after rounding to this many decimals
VERTEX_ROUND_DECIMALS = 12
_NORMALIZATION_TOL = 1e-9

CredalKind = Literal["exact", "approximate", "interval-derived"]


@dataclass(frozen=True)
class ProbabilityIntervals:
    """Per-class probability bounds [lower_i, upper_i]."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self) -> None:
        lower = np.asarray(self.lower, dtype=float).copy()
        upper = np.asarray(self.upper, dtype=float).copy()
        if lower.ndim != 1 or lower.shape != upper.shape:
            raise LengthMismatch(
                f"lower/upper must be 1-D of equal length, got {lower.shape} and {upper.shape}"
            )
        if lower.shape[0] == 0:
            raise LengthMismatch("intervals need at least one class")
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise OutOfRange("interval bounds must be finite")
        if np.any(lower < -_NORMALIZATION_TOL) or np.any(upper > 1.0 + _NORMALIZATION_TOL):
            raise OutOfRange("interval bounds must lie in [0, 1]")
        if np.any(lower > upper + _NORMALIZATION_TOL):
            raise OutOfRange("lower bound exceeds upper bound")
        if float(lower.sum()) > 1.0 + _NORMALIZATION_TOL or float(upper.sum()) < 1.0 - _NORMALIZATION_TOL:
            raise EmptyCredalSet(
                "no probability vector fits: need Σ lower ≤ 1 ≤ Σ upper, got "
                f"Σ lower = {lower.sum():.17g}, Σ upper = {upper.sum():.17g}"
            )
        lower.flags.writeable = False
        upper.flags.writeable = False
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def n(self) -> int:
        return self.lower.shape[0]


@dataclass(frozen=True)
class CredalSet:
    """Vertices (rows) of a credal set; bound-only sets carry no vertices."""

    vertices: np.ndarray
    kind: CredalKind
    bounds: ProbabilityIntervals | None = None

    def __post_init__(self) -> None:
        vertices = np.asarray(self.vertices, dtype=float)
        if vertices.ndim != 2:
            raise LengthMismatch(f"vertices must be a 2-D array, got shape {vertices.shape}")
        if vertices.shape[0] == 0 and self.bounds is None:
            raise NoVertices("credal set needs vertices or interval bounds")
        vertices = vertices.copy()
        vertices.flags.writeable = False
        object.__setattr__(self, "vertices", vertices)

    @property
    def n(self) -> int:
        if self.vertices.shape[0] > 0:
            return self.vertices.shape[1]
        assert self.bounds is not None
        return self.bounds.n

    @property
    def has_vertices(self) -> bool:
        return self.vertices.shape[0] > 0

    def require_vertices(self) -> np.ndarray:
        if not self.has_vertices:
            raise NoVertices(f"{self.kind} credal set carries bounds but no vertex list")
        return self.vertices

    def envelope(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-class (lower, upper) envelope from vertices, or the carried bounds."""
        if self.has_vertices:
            return self.vertices.min(axis=0), self.vertices.max(axis=0)
        assert self.bounds is not None
        return self.bounds.lower.copy(), self.bounds.upper.copy()


def _dedup_vertices(raw: np.ndarray) -> np.ndarray:
    rounded = np.round(raw, VERTEX_ROUND_DECIMALS)
    return np.unique(rounded, axis=0)


def _vertices_for_perms(m: MassFunction, perms: np.ndarray) -> np.ndarray:
    """The permutation rule: each budget set's mass goes to its earliest-ranked member."""
    n = m.n
    masses = m.masses
    contains = containment_matrix(m.budget)
    count = perms.shape[0]
    inverse = np.empty_like(perms)
    inverse[np.arange(count)[:, None], perms] = np.arange(n)[None, :]

    vertices = np.empty((count, n))
    chunk = max(1, (1 << 21) // max(1, contains.shape[0] * n))
    flat_masses = None
    for start in range(0, count, chunk):
        inv = inverse[start:start + chunk]
        ranks = np.where(contains[None, :, :], inv[:, None, :], n)
        assigned_rank = ranks.min(axis=2)
        assigned_class = np.take_along_axis(perms[start:start + chunk], assigned_rank, axis=1)
        block = assigned_class.shape[0]
        if flat_masses is None or flat_masses.shape[0] != block * masses.shape[0]:
            flat_masses = np.tile(masses, block)
        offsets = assigned_class + n * np.arange(block)[:, None]
        vertices[start:start + block] = np.bincount(
            offsets.ravel(), weights=flat_masses, minlength=n * block
        ).reshape(block, n)
    return vertices


def credal_vertices_exact(m: MassFunction) -> CredalSet:
    """Every permutation of the classes contributes one candidate vertex."""
    m.require_valid()
    if m.n > EXACT_VERTEX_MAX_CLASSES:
        raise TooManyClasses(
            f"exact enumeration needs n ≤ {EXACT_VERTEX_MAX_CLASSES}, got {m.n}"
        )
    perms = np.array(list(itertools.permutations(range(m.n))), dtype=np.int64)
    return CredalSet(_dedup_vertices(_vertices_for_perms(m, perms)), "exact")


def credal_vertices_approx(m: MassFunction) -> CredalSet:
    """2n permutations: each class once in first and once in last position."""
    m.require_valid()
    n = m.n
    perms = np.empty((2 * n, n), dtype=np.int64)
    for c in range(n):
        rest = [j for j in range(n) if j != c]
        perms[2 * c] = [c] + rest
        perms[2 * c + 1] = rest + [c]
    return CredalSet(_dedup_vertices(_vertices_for_perms(m, perms)), "approximate")


def class_bounds(m: MassFunction, class_index: int) -> tuple[float, float]:
    """(Bel({c}), Pl({c})): the probability interval of one class."""
    m.require_valid()
    if not 0 <= class_index < m.n:
        raise OutOfRange(f"class index {class_index} outside 0..{m.n - 1}")
    singleton = FocalSet(1 << class_index, m.n)
    lower = belief_of(m, singleton)
    bits = m.budget.bits_array()
    upper = float(m.masses[(bits >> np.uint64(class_index)) & np.uint64(1) == 1].sum())
    return lower, upper


def credal_width(m: MassFunction) -> float:
    """Interval width of the pignistic-argmax class (ties: lowest index)."""
    top = int(np.argmax(pignistic(m)))
    lower, upper = class_bounds(m, top)
    return upper - lower


def interval_softmax(lower_scores, upper_scores) -> ProbabilityIntervals:
    """Interval activation: own bound in the numerator, midpoints for the rest."""
    lower_scores = np.asarray(lower_scores, dtype=float)
    upper_scores = np.asarray(upper_scores, dtype=float)
    if lower_scores.ndim != 1 or lower_scores.shape != upper_scores.shape:
        raise LengthMismatch("score arrays must be 1-D of equal length")
    if not (np.all(np.isfinite(lower_scores)) and np.all(np.isfinite(upper_scores))):
        raise NonOrderedScores("scores must be finite")
    if np.any(lower_scores > upper_scores):
        raise NonOrderedScores("lower score exceeds upper score")

    shift = float(upper_scores.max())
    mids = np.exp((lower_scores + upper_scores) / 2.0 - shift)
    others = mids.sum() - mids
    exp_lower = np.exp(lower_scores - shift)
    exp_upper = np.exp(upper_scores - shift)
    return ProbabilityIntervals(
        exp_lower / (exp_lower + others), exp_upper / (exp_upper + others)
    )


def reachable_intervals(iv: ProbabilityIntervals) -> ProbabilityIntervals:
    """Tighten bounds no probability vector in the set can attain."""
    sum_lower = float(iv.lower.sum())
    sum_upper = float(iv.upper.sum())
    if sum_lower > 1.0 + _NORMALIZATION_TOL or sum_upper < 1.0 - _NORMALIZATION_TOL:
        raise EmptyCredalSet("intervals admit no probability vector")
    upper = np.minimum(iv.upper, 1.0 - (sum_lower - iv.lower))
    lower = np.maximum(iv.lower, 1.0 - (sum_upper - iv.upper))
    return ProbabilityIntervals(lower, upper)


def credal_from_intervals(iv: ProbabilityIntervals) -> CredalSet:
    """Vertices of {p : lower ≤ p ≤ upper, Σp = 1}.

    At a vertex at least n−1 coordinates sit at a bound, so enumerating bound
    patterns with one free coordinate covers every vertex. Beyond the class
    guard the polytope is returned bound-only.
    """
    n = iv.n
    if n > EXACT_VERTEX_MAX_CLASSES:
        return CredalSet(np.empty((0, n)), "interval-derived", bounds=iv)

    candidates = []
    bounds = np.stack([iv.lower, iv.upper])
    for free in range(n):
        rest = [i for i in range(n) if i != free]
        for pattern in itertools.product((0, 1), repeat=n - 1):
            p = np.empty(n)
            p[rest] = bounds[list(pattern), rest]
            remainder = 1.0 - float(p[rest].sum())
            if iv.lower[free] - _NORMALIZATION_TOL <= remainder <= iv.upper[free] + _NORMALIZATION_TOL:
                p[free] = remainder
                candidates.append(p)
    if not candidates:
        raise EmptyCredalSet("no vertex satisfies the interval constraints")
    return CredalSet(_dedup_vertices(np.array(candidates)), "interval-derived", bounds=iv)
