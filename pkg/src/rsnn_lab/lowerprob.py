"""Coherent lower probabilities from sampled probability vectors.

A cloud of samples (ensemble members, posterior draws) induces a lower
probability on each budget set: the worst case over the cloud. The restricted
Moebius inverse of that lower probability is generally signed; repair turns it
into a usable mass function.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .belief import MassFunction, mass_from_belief, repair_mass, BeliefFunction
from .errors import EmptyCloud, FrameMismatch, OutOfRange
from .frame import Budget, Frame, containment_matrix
from .measures import validate_probability


@dataclass(frozen=True)
class SampleCloud:
    frame: Frame
    samples: np.ndarray

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 2:
            raise EmptyCloud(f"samples must be a 2-D array, got shape {samples.shape}")
        if samples.shape[0] == 0:
            raise EmptyCloud("sample cloud is empty")
        if samples.shape[1] != self.frame.n:
            raise FrameMismatch(
                f"samples have {samples.shape[1]} classes, frame has {self.frame.n}"
            )
        for row in samples:
            validate_probability(row, what="cloud sample")
        samples = samples.copy()
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)

    @property
    def size(self) -> int:
        return self.samples.shape[0]

    def mean(self) -> np.ndarray:
        """Collapse to the average vector (the usual single-point baseline)."""
        return self.samples.mean(axis=0)


@dataclass(frozen=True)
class LowerProbability:
    budget: Budget
    lower: np.ndarray

    def __post_init__(self) -> None:
        lower = np.asarray(self.lower, dtype=float)
        if lower.ndim != 1 or lower.shape[0] != self.budget.size:
            raise OutOfRange(
                f"lower values need {self.budget.size} entries, got shape {lower.shape}"
            )
        if np.any(lower < -1e-12) or np.any(lower > 1.0 + 1e-12):
            raise OutOfRange("lower probabilities must lie in [0, 1]")
        lower = lower.copy()
        lower.flags.writeable = False
        object.__setattr__(self, "lower", lower)


def lower_from_samples(cloud: SampleCloud, budget: Budget) -> LowerProbability:
    """lower(A) = min over cloud samples of the probability the sample puts on A."""
    if budget.n != cloud.frame.n:
        raise FrameMismatch(
            f"budget frame size {budget.n} does not match cloud frame size {cloud.frame.n}"
        )
    set_probs = cloud.samples @ containment_matrix(budget).astype(float).T
    return LowerProbability(budget, set_probs.min(axis=0))


def mass_from_lower(lp: LowerProbability) -> MassFunction:
    """Restricted Moebius of the lower probability, then repair."""
    signed = mass_from_belief(BeliefFunction(lp.budget, np.clip(lp.lower, 0.0, 1.0)))
    return repair_mass(signed.budget, signed.masses)
