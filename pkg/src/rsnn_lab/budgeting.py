"""Focal-set budgeting from class geometry in a 3-D embedding space.

Each class gets a 95% confidence ellipsoid fitted to its embedded points.
Candidate focal sets are scored by the Monte-Carlo volume IoU of their
member ellipsoids, and the budget keeps the singletons plus the K sets
that overlap most. A hierarchical-clustering variant builds the budget
from cluster membership instead of volume overlap.

Sampling is sharded with one RNG stream per shard, derived from a per-set
seed, so results do not depend on thread count.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage

from ._util import ordered_map
from .errors import (
    InsufficientPoints,
    OutOfRange,
    ShapeMismatch,
    SingletonSet,
    TooFewPoints,
    TooManyClasses,
)
from .frame import MAX_CLASSES, Budget, FocalSet, Frame, _gosper

CHI2_95_3DOF = 7.815
MC_SHARD = 16384
MC_MIN = 1000


@dataclass(frozen=True)
class ClassEllipsoid:
    """The 95% confidence ellipsoid of one class in embedding space.

    ``axes`` holds unit eigenvectors as columns; ``half_lengths`` are
    sqrt(7.815 * eigenvalue) per axis, zero for degenerate directions.
    """

    class_index: int
    mean: np.ndarray
    covariance: np.ndarray
    eigenvalues: np.ndarray = field(init=False)
    axes: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.covariance, dtype=float)
        if mean.shape != (3,) or cov.shape != (3, 3):
            raise ShapeMismatch(
                f"ellipsoid needs a 3-vector mean and 3x3 covariance, got "
                f"{mean.shape} and {cov.shape}"
            )
        if not np.allclose(cov, cov.T, atol=1e-9):
            raise ShapeMismatch("covariance must be symmetric")
        eigenvalues, axes = np.linalg.eigh(0.5 * (cov + cov.T))
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)
        object.__setattr__(self, "eigenvalues", np.maximum(eigenvalues, 0.0))
        object.__setattr__(self, "axes", axes)

    @property
    def half_lengths(self) -> np.ndarray:
        return np.sqrt(CHI2_95_3DOF * self.eigenvalues)

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        """Tight axis-aligned box: mean +/- sqrt(7.815 * diag(covariance))."""
        extent = np.sqrt(CHI2_95_3DOF * np.maximum(np.diag(self.covariance), 0.0))
        return self.mean - extent, self.mean + extent

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Membership mask: squared Mahalanobis distance within 7.815.

        Zero-eigenvalue directions admit only points with no component
        along them, so degenerate ellipsoids act as lower-dimensional sets.
        """
        offsets = (np.atleast_2d(points) - self.mean) @ self.axes
        squared = offsets**2
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(
                self.eigenvalues > 0.0,
                squared / np.where(self.eigenvalues > 0.0, self.eigenvalues, 1.0),
                np.where(squared > 0.0, np.inf, 0.0),
            )
        return terms.sum(axis=1) <= CHI2_95_3DOF


@dataclass(frozen=True)
class EmbeddingSet:
    """Labeled 3-D points, classes encoded as frame indices."""

    frame: Frame
    points: np.ndarray
    classes: np.ndarray

    def __post_init__(self) -> None:
        points = np.asarray(self.points, dtype=float)
        classes = np.asarray(self.classes, dtype=int)
        if points.ndim != 2 or points.shape[1] != 3:
            raise ShapeMismatch(f"points must be (M, 3), got {points.shape}")
        if classes.shape != (points.shape[0],):
            raise ShapeMismatch("one class index per point required")
        if points.shape[0] == 0:
            raise TooFewPoints("empty embedding set")
        if not np.all(np.isfinite(points)):
            raise OutOfRange("points must be finite")
        if classes.min() < 0 or classes.max() >= self.frame.n:
            raise OutOfRange("class index outside the frame")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "classes", classes)


def fit_class_ellipsoids(emb: EmbeddingSet) -> list[ClassEllipsoid]:
    """Sample mean and covariance per class; every class needs 2+ points."""
    ellipsoids = []
    for c in range(emb.frame.n):
        points = emb.points[emb.classes == c]
        if points.shape[0] < 2:
            raise InsufficientPoints(
                f"class {emb.frame.labels[c]!r} has {points.shape[0]} points, needs at least 2"
            )
        cov = np.cov(points, rowvar=False, ddof=1)
        ellipsoids.append(ClassEllipsoid(c, points.mean(axis=0), cov))
    return ellipsoids


# ---------------------------------------------------------------- overlap

def _union_box(members: Sequence[ClassEllipsoid]) -> tuple[np.ndarray, np.ndarray]:
    lows, highs = zip(*(e.bounding_box() for e in members))
    return np.minimum.reduce(lows), np.maximum.reduce(highs)


def overlap_ratio(
    ellipsoids: Sequence[ClassEllipsoid],
    a: FocalSet,
    mc: int,
    seed: int | np.random.SeedSequence,
    threads: int | None = None,
) -> float:
    """Monte-Carlo volume IoU of the member ellipsoids of ``a``.

    Uniform samples in the bounding box of the union; the ratio is
    #(inside all members) / #(inside any member), and 0 when nothing
    lands inside any member.
    """
    if a.cardinality < 2:
        raise SingletonSet(f"overlap needs at least 2 classes, got {a.cardinality}")
    if mc < MC_MIN:
        raise OutOfRange(f"mc must be at least {MC_MIN}, got {mc}")
    for c in a.indices():
        if c >= len(ellipsoids):
            raise OutOfRange(f"class {c} has no fitted ellipsoid")
    members = [ellipsoids[c] for c in a.indices()]
    low, high = _union_box(members)

    sizes = [MC_SHARD] * (mc // MC_SHARD)
    if mc % MC_SHARD:
        sizes.append(mc % MC_SHARD)
    master = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    children = master.spawn(len(sizes))

    def shard_counts(job: tuple[np.random.SeedSequence, int]) -> tuple[int, int]:
        child, size = job
        rng = np.random.default_rng(child)
        points = rng.uniform(low, high, size=(size, 3))
        inside = np.stack([e.contains(points) for e in members])
        return int(inside.all(axis=0).sum()), int(inside.any(axis=0).sum())

    counts = ordered_map(shard_counts, list(zip(children, sizes)), threads)
    inside_all = sum(c[0] for c in counts)
    inside_any = sum(c[1] for c in counts)
    return inside_all / inside_any if inside_any else 0.0


def select_budget(
    ellipsoids: Sequence[ClassEllipsoid],
    k: int,
    mc: int,
    seed: int,
    threads: int | None = None,
) -> Budget:
    """Singletons plus the K most-overlapping non-singleton sets.

    Candidates are scored cardinality by cardinality, starting at pairs;
    scoring stops as soon as a whole cardinality leaves the ranked top-K
    list unchanged. Each candidate set draws from its own seed stream
    keyed by (seed, set bits), so the score of a set does not depend on
    which other sets were evaluated.
    """
    if k < 0:
        raise OutOfRange(f"k must be nonnegative, got {k}")
    n = len(ellipsoids)
    if n == 0:
        raise TooFewPoints("no ellipsoids to budget over")
    singletons = [FocalSet(1 << c, n) for c in range(n)]
    if k == 0 or n < 2:
        return Budget(tuple(singletons))

    def top_list(scored: dict[int, float]) -> list[int]:
        ranked = sorted(
            scored,
            key=lambda bits: (-scored[bits], FocalSet(bits, n).cardinality, bits),
        )
        return ranked[:k]

    scored: dict[int, float] = {}
    previous_top: list[int] | None = None
    for cardinality in range(2, n + 1):
        candidates = list(_gosper(n, cardinality))

        def score(bits: int) -> float:
            return overlap_ratio(
                ellipsoids,
                FocalSet(bits, n),
                mc,
                np.random.SeedSequence([seed, bits]),
            )

        values = ordered_map(score, candidates, threads)
        scored.update(zip(candidates, values))
        current_top = top_list(scored)
        if current_top == previous_top:
            break
        previous_top = current_top

    chosen = top_list(scored)
    return Budget(tuple(singletons) + tuple(FocalSet(bits, n) for bits in chosen))


# ---------------------------------------------------------------- clustering

def budget_by_clustering(points, k: int) -> Budget:
    """Budget from average-linkage clustering of one point per class.

    Cutting the dendrogram at K clusters, every multi-member cluster
    becomes a focal set; singletons are always present.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[1] != 3:
        raise ShapeMismatch(f"points must be (n, 3), got {points.shape}")
    n = points.shape[0]
    if k < 1:
        raise OutOfRange(f"k must be at least 1, got {k}")
    if n < k:
        raise TooFewPoints(f"{n} points cannot form {k} clusters")
    if n > MAX_CLASSES:
        raise TooManyClasses(f"{n} classes exceed the {MAX_CLASSES}-class limit")
    if not np.all(np.isfinite(points)):
        raise OutOfRange("points must be finite")

    singletons = tuple(FocalSet(1 << c, n) for c in range(n))
    if n == 1:
        return Budget(singletons)

    assignments = fcluster(linkage(points, method="average"), t=k, criterion="maxclust")
    clusters: dict[int, int] = {}
    for index, cluster_id in enumerate(assignments):
        clusters[cluster_id] = clusters.get(cluster_id, 0) | (1 << index)
    multi = sorted(
        (bits for bits in clusters.values() if bits.bit_count() > 1),
        key=lambda bits: (bits.bit_count(), bits),
    )
    return Budget(singletons + tuple(FocalSet(bits, n) for bits in multi))
