"""Scalar uncertainty and divergence measures.

Entropy and divergences default to nats; non-specificity defaults to bits,
following the set-size reading of log|A|. Both bases stay configurable and
report-visible, because mixing them silently is the classic way results stop
being comparable.

The credal-uncertainty measure spans an interval polytope: its maximum entropy
is found by levelling probabilities toward uniform inside the box (the unique
concave optimum), its minimum sits at a polytope vertex, so a vertex scan is
exact.
"""

from __future__ import annotations

import math

import numpy as np

from .belief import MassFunction, pignistic
from .config import KL_EPSILON_DEFAULT, LogBase
from .credal import CredalSet, ProbabilityIntervals, credal_from_intervals
from .errors import FrameMismatch, InvalidProbability

PROBABILITY_TOL = 1e-9
# bisection depth for the max-entropy water level; 2^-60 < the 1e-10 target
_LEVEL_ITERATIONS = 60


def _log_scale(log_base: LogBase) -> float:
    if log_base == "2":
        return math.log(2.0)
    if log_base == "e":
        return 1.0
    raise InvalidProbability(f"unknown log base {log_base!r}")


def validate_probability(p, tol: float = PROBABILITY_TOL, what: str = "probability vector") -> np.ndarray:
    arr = np.asarray(p, dtype=float)
    if arr.ndim != 1 or arr.shape[0] == 0:
        raise InvalidProbability(f"{what} must be a non-empty 1-D array")
    if not np.all(np.isfinite(arr)):
        raise InvalidProbability(f"{what} must be finite")
    if np.any(arr < -tol):
        raise InvalidProbability(f"{what} has negative entries (min {arr.min():.3g})")
    total = float(arr.sum())
    if abs(total - 1.0) > tol:
        raise InvalidProbability(f"{what} sums to {total:.17g}, not 1")
    return arr


def shannon_entropy(p, log_base: LogBase = "e") -> float:
    arr = validate_probability(p)
    positive = arr[arr > 0.0]
    return float(-(positive * np.log(positive)).sum() / _log_scale(log_base))


def pignistic_entropy(m: MassFunction, log_base: LogBase = "e") -> float:
    return shannon_entropy(pignistic(m), log_base)


def non_specificity(m: MassFunction, log_base: LogBase = "2") -> float:
    """Σ m(A) log|A|: zero exactly when all mass sits on singletons."""
    m.require_valid()
    sizes = m.budget.cardinalities().astype(float)
    return float((m.masses * np.log(sizes)).sum() / _log_scale(log_base))


def _kl_terms(y: np.ndarray, q: np.ndarray, epsilon: float | None, scale: float) -> float:
    mask = y > 0.0
    clipped = q[mask] if epsilon is None else np.maximum(q[mask], epsilon)
    return float((y[mask] * (np.log(y[mask]) - np.log(clipped))).sum() / scale)


def kl_divergence(
    y, q, epsilon: float = KL_EPSILON_DEFAULT, log_base: LogBase = "e"
) -> float:
    """KL(y ‖ q) with the clamp applied to the second argument only."""
    y = validate_probability(y, what="truth vector")
    q = validate_probability(q, what="prediction vector")
    if y.shape != q.shape:
        raise FrameMismatch(f"vectors of length {y.shape[0]} and {q.shape[0]}")
    return _kl_terms(y, q, epsilon, _log_scale(log_base))


def js_divergence(y, q, log_base: LogBase = "e") -> float:
    """Symmetric half-KL to the midpoint; bounded by log 2, no clamp needed."""
    y = validate_probability(y, what="first vector")
    q = validate_probability(q, what="second vector")
    if y.shape != q.shape:
        raise FrameMismatch(f"vectors of length {y.shape[0]} and {q.shape[0]}")
    mid = 0.5 * (y + q)
    scale = _log_scale(log_base)
    return 0.5 * _kl_terms(y, mid, None, scale) + 0.5 * _kl_terms(q, mid, None, scale)


def divergence(
    y,
    q,
    kind: str = "kl",
    epsilon: float = KL_EPSILON_DEFAULT,
    log_base: LogBase = "e",
) -> float:
    if kind == "kl":
        return kl_divergence(y, q, epsilon, log_base)
    if kind == "js":
        return js_divergence(y, q, log_base)
    raise InvalidProbability(f"unknown divergence kind {kind!r}")


def min_divergence_to_credal(
    truth,
    cre: CredalSet,
    kind: str = "kl",
    epsilon: float = KL_EPSILON_DEFAULT,
    log_base: LogBase = "e",
) -> float:
    """Distance from the truth to the nearest credal vertex."""
    vertices = cre.require_vertices()
    return min(divergence(truth, vertex, kind, epsilon, log_base) for vertex in vertices)


def max_entropy_distribution(iv: ProbabilityIntervals) -> np.ndarray:
    """The entropy maximizer: clip a common water level into every interval."""
    lower, upper = iv.lower, iv.upper
    lo, hi = 0.0, 1.0
    for _ in range(_LEVEL_ITERATIONS):
        level = 0.5 * (lo + hi)
        if float(np.clip(level, lower, upper).sum()) < 1.0:
            lo = level
        else:
            hi = level
    p = np.clip(0.5 * (lo + hi), lower, upper)
    total = float(p.sum())
    return p / total if total > 0.0 else p


def credal_uncertainty(iv: ProbabilityIntervals, log_base: LogBase = "2") -> float:
    """H̄ − H̲ over the interval polytope."""
    from .credal import EXACT_VERTEX_MAX_CLASSES
    from .errors import TooManyClasses

    if iv.n > EXACT_VERTEX_MAX_CLASSES:
        raise TooManyClasses(
            f"lower-entropy vertex search needs n ≤ {EXACT_VERTEX_MAX_CLASSES}, got {iv.n}"
        )
    scale = _log_scale(log_base)
    top = max_entropy_distribution(iv)
    positive = top[top > 0.0]
    upper_entropy = float(-(positive * np.log(positive)).sum() / scale)

    vertices = credal_from_intervals(iv).require_vertices()
    clipped = np.maximum(vertices, 0.0)
    terms = np.where(clipped > 0.0, clipped * np.log(np.where(clipped > 0.0, clipped, 1.0)), 0.0)
    lower_entropy = float((-terms.sum(axis=1) / scale).min())
    return max(0.0, upper_entropy - lower_entropy)
