"""Unified evaluation: lift any prediction kind, score it, rank models.

Every record kind collapses to one canonical representation (a credal set
plus a mass function) before scoring, so the metric e = d + lambda * ns means
the same thing for point, sample, belief, and interval predictors. Lifting
rules:

- point: the distribution itself is a single credal vertex; ns is 0.
- samples: lower envelope over the cloud, then mass recovery and repair.
- belief: restricted Moebius inversion of the reported beliefs, then repair.
- interval: reachable-interval credal vertices; mass recovered from the
  lower probabilities those vertices induce.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from ._util import ordered_map
from .belief import BeliefFunction, MassFunction, mass_from_belief, pignistic, repair_mass
from .config import MeasureConfig
from .credal import (
    EXACT_VERTEX_MAX_CLASSES,
    CredalSet,
    ProbabilityIntervals,
    credal_from_intervals,
    credal_vertices_approx,
    credal_vertices_exact,
    reachable_intervals,
)
from .errors import FrameMismatch, GridMismatch, LengthMismatch, OutOfRange, TooManyClasses
from .frame import Budget, Frame, enumerate_subsets, powerset_budget, singleton_budget
from .io import DatasetFile, PredictionRecord
from .lowerprob import SampleCloud, lower_from_samples, mass_from_lower
from .measures import min_divergence_to_credal, non_specificity

POWERSET_BUDGET_MAX_CLASSES = 10
LAMBDA_TOL = 1e-12


def default_budget(frame: Frame, declared: Budget | None = None) -> Budget:
    """The budget records are lifted onto when the file declares none.

    Small frames get the full powerset; beyond that the quadratic
    singletons-plus-pairs family keeps lifting tractable.
    """
    if declared is not None:
        return declared
    if frame.n <= POWERSET_BUDGET_MAX_CLASSES:
        return powerset_budget(frame)
    return Budget(tuple(enumerate_subsets(frame, max_cardinality=2)))


@dataclass(frozen=True)
class LiftedPrediction:
    """Canonical form of one prediction: credal vertices plus a mass.

    Point predictions carry the Bayesian mass on the singleton budget, so
    their non-specificity is exactly zero and every downstream consumer
    (scoring, conformal sets) sees one uniform shape.
    """

    credal: CredalSet
    mass: MassFunction
    pignistic: np.ndarray


def _vertices_from_mass(m: MassFunction, mode: str) -> CredalSet:
    if mode == "exact":
        return credal_vertices_exact(m)
    return credal_vertices_approx(m)


def lift_prediction(
    record: PredictionRecord,
    frame: Frame,
    budget: Budget | None = None,
    cfg: MeasureConfig = MeasureConfig(),
) -> LiftedPrediction:
    if record.kind == "point":
        probs = np.asarray(record.probs, dtype=float)
        if probs.shape != (frame.n,):
            raise FrameMismatch(
                f"point prediction has {probs.shape[0]} entries for a {frame.n}-class frame"
            )
        m = MassFunction(singleton_budget(frame), probs)
        return LiftedPrediction(CredalSet(probs[None, :].copy(), "exact"), m, probs)

    if record.kind == "samples":
        cloud = SampleCloud(frame, np.asarray(record.samples, dtype=float))
        m = mass_from_lower(lower_from_samples(cloud, default_budget(frame, budget)))
        return LiftedPrediction(_vertices_from_mass(m, cfg.vertex_mode), m, pignistic(m))

    if record.kind == "belief":
        if budget is None:
            raise FrameMismatch("belief records need a declared budget")
        assert record.set_indices is not None and record.beliefs is not None
        sub = Budget(tuple(budget.sets[i] for i in record.set_indices))
        bel = BeliefFunction(sub, np.clip(record.beliefs, 0.0, 1.0))
        m = repair_mass(sub, mass_from_belief(bel).masses)
        return LiftedPrediction(_vertices_from_mass(m, cfg.vertex_mode), m, pignistic(m))

    if record.kind == "interval":
        if frame.n > EXACT_VERTEX_MAX_CLASSES:
            raise TooManyClasses(
                f"interval lifting enumerates vertices, so it needs n <= "
                f"{EXACT_VERTEX_MAX_CLASSES}, got {frame.n}"
            )
        iv = ProbabilityIntervals(record.lower, record.upper)
        cre = credal_from_intervals(reachable_intervals(iv))
        vertices = cre.require_vertices()
        lp = lower_from_samples(SampleCloud(frame, vertices), default_budget(frame, budget))
        m = mass_from_lower(lp)
        return LiftedPrediction(cre, m, pignistic(m))

    raise FrameMismatch(f"unknown prediction kind {record.kind!r}")


# ---------------------------------------------------------------- scoring

@dataclass(frozen=True)
class EvalRow:
    id: str
    d: float
    ns: float
    e: float
    predicted: str
    true: str
    correct: bool


@dataclass(frozen=True)
class _BaseRow:
    """Lambda-independent scores; e is assembled later per grid point."""

    id: str
    d: float
    ns: float
    predicted: int
    truth: int


def _score_lifted(lifted: LiftedPrediction, truth: int, cfg: MeasureConfig, n: int) -> _BaseRow:
    onehot = np.zeros(n)
    onehot[truth] = 1.0
    d = min_divergence_to_credal(
        onehot, lifted.credal, cfg.divergence, cfg.kl_epsilon, cfg.entropy_log_base
    )
    ns = non_specificity(lifted.mass, cfg.ns_log_base)
    return _BaseRow("", d, ns, int(np.argmax(lifted.pignistic)), truth)


def evaluate_instance(
    record: PredictionRecord,
    truth: int,
    lam: float,
    cfg: MeasureConfig,
    frame: Frame,
    budget: Budget | None = None,
) -> EvalRow:
    if lam < 0.0:
        raise OutOfRange(f"lambda must be nonnegative, got {lam}")
    if not 0 <= truth < frame.n:
        raise FrameMismatch(f"true class {truth} outside the {frame.n}-class frame")
    lifted = lift_prediction(record, frame, budget, cfg)
    base = _score_lifted(lifted, truth, cfg, frame.n)
    return EvalRow(
        record.id,
        base.d,
        base.ns,
        base.d + lam * base.ns,
        frame.labels[base.predicted],
        frame.labels[truth],
        base.predicted == truth,
    )


def _base_rows(
    ds: DatasetFile,
    labels: Sequence[int],
    cfg: MeasureConfig,
    threads: int | None = None,
) -> list[_BaseRow]:
    if len(labels) != len(ds.records):
        raise LengthMismatch(f"{len(ds.records)} records but {len(labels)} labels")
    if not ds.records:
        raise LengthMismatch("nothing to evaluate")
    frame, budget = ds.frame, ds.budget

    def one(pair: tuple[PredictionRecord, int]) -> _BaseRow:
        record, truth = pair
        if not 0 <= truth < frame.n:
            raise FrameMismatch(f"true class {truth} outside the {frame.n}-class frame")
        base = _score_lifted(lift_prediction(record, frame, budget, cfg), truth, cfg, frame.n)
        return _BaseRow(record.id, base.d, base.ns, base.predicted, truth)

    return ordered_map(one, list(zip(ds.records, labels)), threads)


def _stats(values: np.ndarray) -> dict | None:
    if values.size == 0:
        return None
    return {"mean": float(values.mean()), "std": float(values.std())}


@dataclass(frozen=True)
class EvalReport:
    model: str
    lam: float
    frame: Frame
    config: MeasureConfig
    rows: tuple[EvalRow, ...]

    @property
    def count(self) -> int:
        return len(self.rows)

    @property
    def mean_e(self) -> float:
        return float(np.mean([r.e for r in self.rows]))

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(r.id for r in self.rows)

    def to_payload(self) -> dict:
        d = np.array([r.d for r in self.rows])
        ns = np.array([r.ns for r in self.rows])
        e = np.array([r.e for r in self.rows])
        mask = np.array([r.correct for r in self.rows])

        def split(select: np.ndarray) -> dict:
            return {
                "count": int(select.sum()),
                "d": _stats(d[select]),
                "ns": _stats(ns[select]),
                "e": _stats(e[select]),
            }

        return {
            "kind": "eval",
            "model": self.model,
            "lambda": self.lam,
            "count": self.count,
            "accuracy": float(mask.mean()),
            "frame": list(self.frame.labels),
            "config": self.config.as_dict(),
            "overall": {"d": _stats(d), "ns": _stats(ns), "e": _stats(e)},
            "correct": split(mask),
            "incorrect": split(~mask),
            "rows": [
                {
                    "id": r.id,
                    "d": r.d,
                    "ns": r.ns,
                    "e": r.e,
                    "predicted": r.predicted,
                    "true": r.true,
                    "correct": r.correct,
                }
                for r in self.rows
            ],
        }


def _report_from_base(
    base: Sequence[_BaseRow],
    lam: float,
    model: str,
    frame: Frame,
    cfg: MeasureConfig,
) -> EvalReport:
    rows = tuple(
        EvalRow(
            b.id,
            b.d,
            b.ns,
            b.d + lam * b.ns,
            frame.labels[b.predicted],
            frame.labels[b.truth],
            b.predicted == b.truth,
        )
        for b in base
    )
    return EvalReport(model, lam, frame, cfg, rows)


def evaluate_dataset(
    ds: DatasetFile,
    labels: Sequence[int],
    lam: float,
    cfg: MeasureConfig | None = None,
    model: str = "model",
    threads: int | None = None,
) -> EvalReport:
    if lam < 0.0:
        raise OutOfRange(f"lambda must be nonnegative, got {lam}")
    cfg = ds.config if cfg is None else cfg
    base = _base_rows(ds, labels, cfg, threads)
    return _report_from_base(base, lam, model, ds.frame, cfg)


def sweep_lambdas(
    ds: DatasetFile,
    labels: Sequence[int],
    grid: Sequence[float],
    cfg: MeasureConfig | None = None,
    model: str = "model",
    threads: int | None = None,
) -> list[EvalReport]:
    """One report per grid value; the expensive lifting runs only once."""
    if not grid:
        raise GridMismatch("empty lambda grid")
    for lam in grid:
        if lam < 0.0:
            raise OutOfRange(f"lambda must be nonnegative, got {lam}")
    cfg = ds.config if cfg is None else cfg
    base = _base_rows(ds, labels, cfg, threads)
    return [_report_from_base(base, lam, model, ds.frame, cfg) for lam in grid]


# ---------------------------------------------------------------- ranking

@dataclass(frozen=True)
class Ranking:
    grid: tuple[float, ...]
    orders: tuple[tuple[tuple[str, float], ...], ...]

    def to_payload(self) -> dict:
        models = sorted({name for order in self.orders for name, _ in order})
        return {
            "kind": "rank",
            "lambda_grid": list(self.grid),
            "models": models,
            "rankings": [
                {
                    "lambda": lam,
                    "order": [{"model": name, "mean_e": value} for name, value in order],
                }
                for lam, order in zip(self.grid, self.orders)
            ],
        }


def rank_models(
    reports: Mapping[str, Sequence[EvalReport]],
    grid: Sequence[float],
) -> Ranking:
    """Ascending mean-e ordering per grid value; name breaks exact ties."""
    if not reports:
        raise GridMismatch("no models to rank")
    if not grid:
        raise GridMismatch("empty lambda grid")

    reference_ids: tuple[str, ...] | None = None
    for name, model_reports in reports.items():
        if len(model_reports) != len(grid):
            raise GridMismatch(
                f"model {name!r} has {len(model_reports)} reports for a "
                f"{len(grid)}-point grid"
            )
        for lam, report in zip(grid, model_reports):
            if abs(report.lam - lam) > LAMBDA_TOL:
                raise GridMismatch(
                    f"model {name!r} has a report at lambda {report.lam}, expected {lam}"
                )
        ids = tuple(sorted(model_reports[0].ids))
        if reference_ids is None:
            reference_ids = ids
        elif ids != reference_ids:
            raise GridMismatch(f"model {name!r} was evaluated on different instances")

    orders = []
    for i, _ in enumerate(grid):
        pairs = sorted(
            ((name, reports[name][i].mean_e) for name in reports),
            key=lambda pair: (pair[1], pair[0]),
        )
        orders.append(tuple(pairs))
    return Ranking(tuple(float(x) for x in grid), tuple(orders))
