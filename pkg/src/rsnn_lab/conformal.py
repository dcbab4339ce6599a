"""Inductive conformal prediction over belief predictions.

Non-conformity is one minus the plausibility of the candidate class, so a
class the prediction finds fully plausible scores zero. P-values are smoothed:
the tie count includes the test point itself, which is what makes coverage
exactly 1 − ε under exchangeability. That convention is stamped into every
report, since the unsmoothed variant differs on tied scores.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .belief import MassFunction
from .errors import LengthMismatch, OutOfRange
from .frame import containment_matrix

TIE_CONVENTION = "test point included in the equality count"


@dataclass(frozen=True)
class ConformalCalibration:
    scores: np.ndarray

    def __post_init__(self) -> None:
        scores = np.asarray(self.scores, dtype=float)
        if scores.ndim != 1 or scores.shape[0] == 0:
            raise LengthMismatch("calibration needs at least one score")
        if not np.all(np.isfinite(scores)):
            raise OutOfRange("calibration scores must be finite")
        scores = np.sort(scores)
        scores.flags.writeable = False
        object.__setattr__(self, "scores", scores)

    @property
    def q(self) -> int:
        return self.scores.shape[0]


@dataclass(frozen=True)
class PredictionSet:
    instance_id: str
    members: tuple[int, ...]
    p_values: np.ndarray
    epsilon: float


def nonconformity_vector(m: MassFunction) -> np.ndarray:
    """1 − Pl({c}) for every class at once."""
    m.require_valid()
    pl = containment_matrix(m.budget).astype(float).T @ m.masses
    return 1.0 - pl


def nonconformity(m: MassFunction, c: int) -> float:
    if not 0 <= c < m.n:
        raise OutOfRange(f"class index {c} outside 0..{m.n - 1}")
    return float(nonconformity_vector(m)[c])


def calibrate(
    calib_preds: Sequence[MassFunction], calib_labels: Sequence[int]
) -> ConformalCalibration:
    """Score every calibration pair at its true class; keep the sorted scores."""
    if len(calib_preds) != len(calib_labels):
        raise LengthMismatch(
            f"{len(calib_preds)} predictions vs {len(calib_labels)} labels"
        )
    if not calib_preds:
        raise LengthMismatch("calibration set is empty")
    scores = np.array(
        [nonconformity(m, int(label)) for m, label in zip(calib_preds, calib_labels)]
    )
    return ConformalCalibration(scores)


def p_value(cal: ConformalCalibration, s: float, u: float) -> float:
    """(#{sj > s} + u · (#{sj = s} + 1)) / (q + 1)."""
    left = int(np.searchsorted(cal.scores, s, side="left"))
    right = int(np.searchsorted(cal.scores, s, side="right"))
    greater = cal.q - right
    ties = right - left
    return (greater + u * (ties + 1)) / (cal.q + 1)


def predict_set(
    cal: ConformalCalibration,
    m: MassFunction,
    epsilon: float,
    seed: "int | np.random.SeedSequence",
    instance_id: str = "",
) -> PredictionSet:
    """Γ = {c : p^c > ε}, with one fresh u per class from the seed."""
    if not 0.0 < epsilon < 1.0:
        raise OutOfRange(f"epsilon {epsilon} outside (0, 1)")
    rng = np.random.default_rng(seed)
    scores = nonconformity_vector(m)
    draws = rng.uniform(size=scores.shape[0])
    p_values = np.array([p_value(cal, float(s), float(u)) for s, u in zip(scores, draws)])
    members = tuple(int(c) for c in np.nonzero(p_values > epsilon)[0])
    return PredictionSet(instance_id, members, p_values, epsilon)


@dataclass(frozen=True)
class CoverageReport:
    epsilon: float
    seed: int
    count: int
    coverage: float
    avg_set_size: float
    per_class: tuple[dict, ...]
    convention: str = TIE_CONVENTION

    def to_payload(self) -> dict:
        return {
            "kind": "conformal",
            "convention": self.convention,
            "epsilon": self.epsilon,
            "seed": self.seed,
            "count": self.count,
            "coverage": self.coverage,
            "avg_set_size": self.avg_set_size,
            "per_class": list(self.per_class),
        }


def coverage_report(
    cal: ConformalCalibration,
    test_preds: Sequence[MassFunction],
    test_labels: Sequence[int],
    epsilon: float,
    seed: int,
) -> CoverageReport:
    """Empirical coverage and set sizes; per-instance seeds derive from the master."""
    if len(test_preds) != len(test_labels):
        raise LengthMismatch(f"{len(test_preds)} predictions vs {len(test_labels)} labels")
    if not test_preds:
        raise LengthMismatch("test set is empty")
    if not 0.0 < epsilon < 1.0:
        raise OutOfRange(f"epsilon {epsilon} outside (0, 1)")

    n = test_preds[0].n
    children = np.random.SeedSequence(seed).spawn(len(test_preds))
    hits = np.zeros(len(test_preds), dtype=bool)
    sizes = np.zeros(len(test_preds), dtype=np.int64)
    truths = np.array([int(label) for label in test_labels])
    for i, m in enumerate(test_preds):
        pset = predict_set(cal, m, epsilon, children[i], instance_id=str(i))
        hits[i] = truths[i] in pset.members
        sizes[i] = len(pset.members)

    per_class = []
    for c in range(n):
        mask = truths == c
        entry: dict = {"class": c, "count": int(mask.sum())}
        if entry["count"] > 0:
            entry["coverage"] = float(hits[mask].mean())
            entry["avg_set_size"] = float(sizes[mask].mean())
        else:
            entry["coverage"] = None
            entry["avg_set_size"] = None
        per_class.append(entry)

    return CoverageReport(
        epsilon=epsilon,
        seed=seed,
        count=len(test_preds),
        coverage=float(hits.mean()),
        avg_set_size=float(sizes.mean()),
        per_class=tuple(per_class),
    )
