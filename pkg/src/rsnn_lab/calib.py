"""Calibration and out-of-distribution separation metrics.

ECE uses right-inclusive equal-width bins. AUROC is the Mann-Whitney pair
probability (ties count one half), AUPRC is step-form average precision with
the out-of-distribution side as the positive class. Both are reported with the
convention baked into the report metadata, because the interpolated variants
genuinely differ on small samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import rankdata

from .errors import EmptyInput, EmptySide, OutOfRange


@dataclass(frozen=True)
class ScoredOutcome:
    confidence: float
    predicted: str
    true: str

    def __post_init__(self) -> None:
        if not math.isfinite(self.confidence):
            raise OutOfRange("confidence must be finite")
        if not 0.0 <= self.confidence <= 1.0:
            raise OutOfRange(f"confidence {self.confidence} outside [0, 1]")

    @property
    def correct(self) -> bool:
        return self.predicted == self.true


@dataclass(frozen=True)
class OodScores:
    id_scores: np.ndarray
    ood_scores: np.ndarray

    def __post_init__(self) -> None:
        for name in ("id_scores", "ood_scores"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.ndim != 1 or arr.shape[0] == 0:
                raise EmptySide(f"{name} must be a non-empty 1-D array")
            if not np.all(np.isfinite(arr)):
                raise EmptySide(f"{name} contains non-finite values")
            arr = arr.copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)


def _bin_index(confidence: float, bins: int) -> int:
    # right-inclusive bins: (0, 1/bins], (1/bins, 2/bins], ...; 0 joins the first
    return max(0, math.ceil(confidence * bins) - 1)


def ece(outcomes: Sequence[ScoredOutcome], bins: int = 10) -> float:
    """Weighted |accuracy − confidence| gap over equal-width confidence bins."""
    if not outcomes:
        raise EmptyInput("no outcomes to bin")
    if bins < 1:
        raise OutOfRange("need at least one bin")
    counts = np.zeros(bins)
    conf_sums = np.zeros(bins)
    correct_sums = np.zeros(bins)
    for outcome in outcomes:
        idx = _bin_index(outcome.confidence, bins)
        counts[idx] += 1
        conf_sums[idx] += outcome.confidence
        correct_sums[idx] += 1.0 if outcome.correct else 0.0
    total = float(counts.sum())
    filled = counts > 0
    gaps = np.abs(correct_sums[filled] / counts[filled] - conf_sums[filled] / counts[filled])
    return float((gaps * counts[filled] / total).sum())


def roc_auc(s: OodScores) -> float:
    """P(OoD score > iD score), ties half.

    The numerator is an exact half-integer; dividing the smaller side and
    complementing the larger keeps auc(s) + auc(swapped) equal to 1.0 in
    floating point, not just mathematically.
    """
    n_id = s.id_scores.shape[0]
    n_ood = s.ood_scores.shape[0]
    ranks = rankdata(np.concatenate([s.id_scores, s.ood_scores]), method="average")
    u_stat = float(ranks[n_id:].sum()) - n_ood * (n_ood + 1) / 2.0
    num2 = int(round(2.0 * u_stat))
    den2 = 2 * n_id * n_ood
    if 2 * num2 <= den2:
        return num2 / den2
    return 1.0 - (den2 - num2) / den2


def pr_auc(s: OodScores) -> float:
    """Step-form average precision with OoD as the positive class."""
    scores = np.concatenate([s.id_scores, s.ood_scores])
    positive = np.concatenate(
        [np.zeros(s.id_scores.shape[0]), np.ones(s.ood_scores.shape[0])]
    )
    order = np.argsort(-scores, kind="stable")
    scores = scores[order]
    positive = positive[order]

    # one point per distinct threshold: indices where the score changes next
    boundaries = np.nonzero(np.diff(scores))[0]
    last = np.concatenate([boundaries, [scores.shape[0] - 1]])
    tp = np.cumsum(positive)[last]
    taken = last + 1.0
    precision = tp / taken
    recall = tp / positive.sum()
    recall_steps = np.diff(np.concatenate([[0.0], recall]))
    return float((recall_steps * precision).sum())


def entropy_shift(id_entropies, ood_entropies) -> dict:
    """Per-side mean/std summaries plus the OoD − iD mean gap."""
    id_arr = np.asarray(id_entropies, dtype=float)
    ood_arr = np.asarray(ood_entropies, dtype=float)
    if id_arr.ndim != 1 or id_arr.shape[0] == 0:
        raise EmptySide("in-distribution entropies are empty")
    if ood_arr.ndim != 1 or ood_arr.shape[0] == 0:
        raise EmptySide("out-of-distribution entropies are empty")
    return {
        "id": {
            "count": int(id_arr.shape[0]),
            "mean": float(id_arr.mean()),
            "std": float(id_arr.std()),
        },
        "ood": {
            "count": int(ood_arr.shape[0]),
            "mean": float(ood_arr.mean()),
            "std": float(ood_arr.std()),
        },
        "gap": float(ood_arr.mean() - id_arr.mean()),
    }
