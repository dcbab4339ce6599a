"""Belief-vector BCE loss with mass regularizers, and a toy trainer.

The loss drives per-set belief predictions toward the ground-truth belief
encoding while penalizing invalid implied masses: Mr charges negative
masses, Ms charges total mass above one. Gradients are analytic; the
Moebius map is linear, so both regularizers chain through one matrix.

The trainer is deliberately tiny: full-batch descent with a fixed step on
a one-hidden-layer tanh network, bit-reproducible from its seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .belief import moebius_matrix, pignistic, repair_mass
from .errors import DivergedLoss, OutOfRange, ShapeMismatch
from .frame import Budget
from .measures import shannon_entropy

BELIEF_CLAMP = 1e-7


@dataclass(frozen=True)
class LossConfig:
    alpha: float = 1e-3
    beta: float = 1e-3
    batch_size: int | None = None

    def __post_init__(self) -> None:
        if self.alpha < 0.0 or self.beta < 0.0:
            raise OutOfRange("alpha and beta must be nonnegative")


def _as_batch(values, size: int, what: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != size:
        raise ShapeMismatch(f"{what} must have {size} columns, got shape {arr.shape}")
    return arr


def rs_bce(pred_beliefs, gt) -> float:
    """Mean binary cross-entropy over batch and budget sets, clamped at 1e-7."""
    pred = np.asarray(pred_beliefs, dtype=float)
    gt_arr = np.asarray(gt, dtype=float)
    if pred.shape != gt_arr.shape:
        raise ShapeMismatch(f"beliefs {pred.shape} and ground truth {gt_arr.shape} differ")
    clamped = np.clip(pred, BELIEF_CLAMP, 1.0 - BELIEF_CLAMP)
    terms = -(gt_arr * np.log(clamped) + (1.0 - gt_arr) * np.log(1.0 - clamped))
    return float(terms.mean())


def mass_regularizers(pred_masses) -> tuple[float, float]:
    """Mr: batch-mean clamped negativity; Ms: clamped batch-mean excess sum."""
    masses = np.atleast_2d(np.asarray(pred_masses, dtype=float))
    mr = float(np.maximum(0.0, -masses).sum(axis=1).mean())
    ms = max(0.0, float(masses.sum(axis=1).mean()) - 1.0)
    return mr, ms


def _forward(
    logits, gt, budget: Budget
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    size = budget.size
    z = _as_batch(logits, size, "logits")
    g = _as_batch(gt, size, "ground truth")
    if z.shape[0] != g.shape[0]:
        raise ShapeMismatch(f"batch sizes differ: {z.shape[0]} vs {g.shape[0]}")
    beliefs = np.clip(1.0 / (1.0 + np.exp(-z)), BELIEF_CLAMP, 1.0 - BELIEF_CLAMP)
    masses = beliefs @ moebius_matrix(budget).T
    return z, g, beliefs, masses


def rs_total_loss(logits, gt, budget: Budget, cfg: LossConfig = LossConfig()) -> float:
    z, g, beliefs, masses = _forward(logits, gt, budget)
    mr, ms = mass_regularizers(masses)
    return rs_bce(beliefs, g) + cfg.alpha * mr + cfg.beta * ms


def loss_gradient(logits, gt, budget: Budget, cfg: LossConfig = LossConfig()) -> np.ndarray:
    """Analytic d(loss)/d(logits); subgradient 0 at hinge kinks and clamps."""
    z, g, beliefs, masses = _forward(logits, gt, budget)
    batch, size = z.shape
    moebius = moebius_matrix(budget)

    bce_term = (beliefs - g) / (beliefs * (1.0 - beliefs)) / (batch * size)
    negative = (masses < 0.0).astype(float)
    mr_term = (cfg.alpha / batch) * (-negative @ moebius)
    excess = float(masses.sum(axis=1).mean()) - 1.0
    ms_term = (cfg.beta / batch) * float(excess > 0.0) * moebius.sum(axis=0)

    sigmoid = 1.0 / (1.0 + np.exp(-z))
    active = ((sigmoid > BELIEF_CLAMP) & (sigmoid < 1.0 - BELIEF_CLAMP)).astype(float)
    return (bce_term + mr_term + ms_term) * active * sigmoid * (1.0 - sigmoid)


# ---------------------------------------------------------------- toy data

@dataclass(frozen=True)
class ToyData:
    points: np.ndarray
    labels: np.ndarray

    def __post_init__(self) -> None:
        points = np.asarray(self.points, dtype=float)
        labels = np.asarray(self.labels, dtype=int)
        if points.ndim != 2 or points.shape[1] != 2:
            raise ShapeMismatch(f"points must be (M, 2), got {points.shape}")
        if labels.shape != (points.shape[0],):
            raise ShapeMismatch("one label per point required")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "labels", labels)


def sample_class_clusters(
    n_classes: int,
    per_class: int,
    seed: int,
    radius: float = 4.0,
    spread: float = 0.4,
) -> ToyData:
    """Gaussian blobs on a circle, one per class, interleaved and shuffled."""
    if n_classes < 1 or per_class < 1:
        raise OutOfRange("need at least one class and one point per class")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    angles = 2.0 * np.pi * np.arange(n_classes) / n_classes
    centers = radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)
    points = np.concatenate(
        [rng.normal(centers[c], spread, size=(per_class, 2)) for c in range(n_classes)]
    )
    labels = np.repeat(np.arange(n_classes), per_class)
    order = rng.permutation(points.shape[0])
    return ToyData(points[order], labels[order])


# ---------------------------------------------------------------- toy model

@dataclass
class ToyModel:
    """x -> tanh(x W1 + b1) W2 + b2, producing one logit per budget set."""

    budget: Budget
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    @classmethod
    def initialize(cls, budget: Budget, hidden: int, rng: np.random.Generator) -> "ToyModel":
        return cls(
            budget,
            rng.normal(0.0, 0.5, size=(2, hidden)),
            np.zeros(hidden),
            rng.normal(0.0, 0.1, size=(hidden, budget.size)),
            np.zeros(budget.size),
        )

    def hidden(self, points: np.ndarray) -> np.ndarray:
        return np.tanh(points @ self.w1 + self.b1)

    def logits(self, points: np.ndarray) -> np.ndarray:
        return self.hidden(points) @ self.w2 + self.b2

    def predict_pignistic(self, points: np.ndarray) -> np.ndarray:
        """Per-point pignistic distribution after mass repair."""
        beliefs = np.clip(
            1.0 / (1.0 + np.exp(-self.logits(points))), BELIEF_CLAMP, 1.0 - BELIEF_CLAMP
        )
        raw = beliefs @ moebius_matrix(self.budget).T
        return np.stack([pignistic(repair_mass(self.budget, row)) for row in raw])


def _mean_entropy(probs: np.ndarray) -> float:
    return float(np.mean([shannon_entropy(row) for row in probs]))


def train_toy(
    data: ToyData,
    budget: Budget,
    cfg: LossConfig = LossConfig(),
    epochs: int = 2000,
    seed: int = 0,
    hidden: int = 16,
    step: float = 5.0,
) -> tuple[ToyModel, dict]:
    """Fixed-step full-batch descent; held-out and translated-point metrics.

    The last fifth of a seeded shuffle is held out. Shifted copies of the
    held-out points (translated far past the data's support) probe whether
    the model's pignistic entropy rises away from the training clusters.
    """
    if not budget.contains_all_singletons:
        raise OutOfRange("toy training needs every singleton in the budget")
    n = budget.n
    if int(data.labels.min(initial=0)) < 0 or int(data.labels.max(initial=0)) >= n:
        raise OutOfRange(f"labels must lie in [0, {n})")
    if epochs < 1:
        raise OutOfRange("epochs must be positive")

    rng = np.random.default_rng(np.random.SeedSequence(seed))
    order = rng.permutation(data.points.shape[0])
    points, labels = data.points[order], data.labels[order]
    cut = max(1, int(round(0.8 * points.shape[0])))
    train_x, train_y = points[:cut], labels[:cut]
    held_x, held_y = points[cut:], labels[cut:]
    if held_x.shape[0] == 0:
        held_x, held_y = train_x, train_y

    from .belief import encode_ground_truth

    gt = np.stack([encode_ground_truth(budget, int(c)) for c in train_y])
    model = ToyModel.initialize(budget, hidden, rng)

    loss = float("nan")
    for _ in range(epochs):
        hidden_act = np.tanh(train_x @ model.w1 + model.b1)
        z = hidden_act @ model.w2 + model.b2
        loss = rs_total_loss(z, gt, budget, cfg)
        if not np.isfinite(loss):
            raise DivergedLoss(f"loss became {loss}")
        grad_z = loss_gradient(z, gt, budget, cfg)
        grad_w2 = hidden_act.T @ grad_z
        grad_b2 = grad_z.sum(axis=0)
        grad_hidden = (grad_z @ model.w2.T) * (1.0 - hidden_act**2)
        grad_w1 = train_x.T @ grad_hidden
        grad_b1 = grad_hidden.sum(axis=0)
        model.w2 -= step * grad_w2
        model.b2 -= step * grad_b2
        model.w1 -= step * grad_w1
        model.b1 -= step * grad_b1

    span = float(np.ptp(points, axis=0).max())
    shift = np.array([5.0 * span + 5.0, 5.0 * span + 5.0])
    id_probs = model.predict_pignistic(held_x)
    ood_probs = model.predict_pignistic(held_x + shift)
    accuracy = float((id_probs.argmax(axis=1) == held_y).mean())
    id_entropy = _mean_entropy(id_probs)
    ood_entropy = _mean_entropy(ood_probs)
    metrics = {
        "accuracy": accuracy,
        "final_loss": loss,
        "held_out": int(held_x.shape[0]),
        "id_entropy": id_entropy,
        "ood_entropy": ood_entropy,
        "entropy_gap": ood_entropy - id_entropy,
        "epochs": int(epochs),
    }
    return model, metrics
