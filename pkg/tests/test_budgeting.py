"""Tests for ellipsoid fitting, Monte-Carlo overlap, and budget selection."""

from __future__ import annotations

import math

import numpy as np
import pytest

from rsnn_lab.budgeting import (
    CHI2_95_3DOF,
    ClassEllipsoid,
    EmbeddingSet,
    budget_by_clustering,
    fit_class_ellipsoids,
    overlap_ratio,
    select_budget,
)
from rsnn_lab.errors import (
    InsufficientPoints,
    OutOfRange,
    ShapeMismatch,
    SingletonSet,
    TooFewPoints,
    TooManyClasses,
)
from rsnn_lab.frame import FocalSet, make_frame


def _sphere(class_index: int, center, radius: float = 1.0) -> ClassEllipsoid:
    cov = np.eye(3) * (radius**2 / CHI2_95_3DOF)
    return ClassEllipsoid(class_index, np.asarray(center, dtype=float), cov)


class TestClassEllipsoid:
    def test_unit_covariance_half_lengths(self):
        e = ClassEllipsoid(0, np.zeros(3), np.eye(3))
        np.testing.assert_allclose(e.half_lengths, math.sqrt(7.815), atol=1e-9)

    def test_bounding_box_formula(self):
        cov = np.diag([1.0, 4.0, 0.25])
        e = ClassEllipsoid(0, np.array([1.0, 2.0, 3.0]), cov)
        low, high = e.bounding_box()
        extent = np.sqrt(7.815 * np.array([1.0, 4.0, 0.25]))
        np.testing.assert_allclose(low, e.mean - extent, atol=1e-12)
        np.testing.assert_allclose(high, e.mean + extent, atol=1e-12)

    def test_contains_boundary(self):
        e = _sphere(0, [0.0, 0.0, 0.0], radius=1.0)
        inside = np.array([[0.999, 0.0, 0.0], [0.0, 0.0, 0.0]])
        outside = np.array([[1.001, 0.0, 0.0]])
        assert e.contains(inside).all()
        assert not e.contains(outside).any()

    def test_degenerate_direction(self):
        cov = np.diag([1.0, 1.0, 0.0])
        e = ClassEllipsoid(0, np.zeros(3), cov)
        assert e.contains(np.array([[0.5, 0.5, 0.0]]))[0]
        assert not e.contains(np.array([[0.0, 0.0, 1e-9]]))[0]

    def test_rejects_bad_shapes(self):
        with pytest.raises(ShapeMismatch):
            ClassEllipsoid(0, np.zeros(2), np.eye(3))
        with pytest.raises(ShapeMismatch):
            ClassEllipsoid(0, np.zeros(3), np.eye(2))

    def test_rejects_asymmetric_covariance(self):
        cov = np.eye(3)
        cov[0, 1] = 0.5
        with pytest.raises(ShapeMismatch):
            ClassEllipsoid(0, np.zeros(3), cov)


class TestEmbeddingSetAndFit:
    def test_fit_recovers_mean_and_covariance(self):
        rng = np.random.default_rng(0)
        frame = make_frame(["a", "b"])
        pts_a = rng.normal([0, 0, 0], 1.0, size=(500, 3))
        pts_b = rng.normal([10, 0, 0], 0.5, size=(500, 3))
        emb = EmbeddingSet(
            frame,
            np.vstack([pts_a, pts_b]),
            np.array([0] * 500 + [1] * 500),
        )
        fitted = fit_class_ellipsoids(emb)
        np.testing.assert_allclose(fitted[0].mean, [0, 0, 0], atol=0.2)
        np.testing.assert_allclose(fitted[1].mean, [10, 0, 0], atol=0.2)
        np.testing.assert_allclose(fitted[0].covariance, np.eye(3), atol=0.25)
        assert fitted[0].class_index == 0
        assert fitted[1].class_index == 1

    def test_insufficient_points(self):
        frame = make_frame(["a", "b"])
        emb = EmbeddingSet(
            frame,
            np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [5.0, 5.0, 5.0]]),
            np.array([0, 0, 1]),
        )
        with pytest.raises(InsufficientPoints):
            fit_class_ellipsoids(emb)

    def test_embedding_shape_checks(self):
        frame = make_frame(["a"])
        with pytest.raises(ShapeMismatch):
            EmbeddingSet(frame, np.zeros((3, 2)), np.zeros(3, dtype=int))
        with pytest.raises(ShapeMismatch):
            EmbeddingSet(frame, np.zeros((3, 3)), np.zeros(2, dtype=int))
        with pytest.raises(TooFewPoints):
            EmbeddingSet(frame, np.zeros((0, 3)), np.zeros(0, dtype=int))
        with pytest.raises(OutOfRange):
            EmbeddingSet(frame, np.zeros((2, 3)), np.array([0, 1]))


class TestOverlapRatio:
    def test_identical_spheres_give_one(self):
        spheres = [_sphere(0, [0, 0, 0]), _sphere(1, [0, 0, 0])]
        got = overlap_ratio(spheres, FocalSet(0b11, 2), 50_000, seed=1)
        assert got == 1.0

    def test_disjoint_spheres_give_zero(self):
        spheres = [_sphere(0, [0, 0, 0]), _sphere(1, [50, 0, 0])]
        got = overlap_ratio(spheres, FocalSet(0b11, 2), 50_000, seed=1)
        assert got == 0.0

    def test_unit_sphere_lens_iou(self):
        """Two unit spheres one radius apart: IoU is exactly 5/27."""
        spheres = [_sphere(0, [0, 0, 0]), _sphere(1, [1, 0, 0])]
        got = overlap_ratio(spheres, FocalSet(0b11, 2), 200_000, seed=42)
        assert got == pytest.approx(5.0 / 27.0, rel=0.02)

    def test_thread_count_does_not_change_result(self):
        spheres = [_sphere(0, [0, 0, 0]), _sphere(1, [1, 0, 0])]
        runs = {
            overlap_ratio(spheres, FocalSet(0b11, 2), 60_000, seed=9, threads=t)
            for t in (1, 2, 8)
        }
        assert len(runs) == 1

    def test_deterministic_per_seed(self):
        spheres = [_sphere(0, [0, 0, 0]), _sphere(1, [1.5, 0, 0])]
        a = overlap_ratio(spheres, FocalSet(0b11, 2), 20_000, seed=3)
        b = overlap_ratio(spheres, FocalSet(0b11, 2), 20_000, seed=3)
        assert a == b

    def test_result_in_unit_interval_and_symmetric(self):
        rng = np.random.default_rng(4)
        for _ in range(5):
            centers = rng.uniform(-2, 2, size=(3, 3))
            spheres = [_sphere(i, centers[i]) for i in range(3)]
            value = overlap_ratio(spheres, FocalSet(0b111, 3), 20_000, seed=11)
            assert 0.0 <= value <= 1.0

    def test_singleton_rejected(self):
        spheres = [_sphere(0, [0, 0, 0]), _sphere(1, [1, 0, 0])]
        with pytest.raises(SingletonSet):
            overlap_ratio(spheres, FocalSet(0b01, 2), 20_000, seed=0)

    def test_small_mc_rejected(self):
        spheres = [_sphere(0, [0, 0, 0]), _sphere(1, [1, 0, 0])]
        with pytest.raises(OutOfRange):
            overlap_ratio(spheres, FocalSet(0b11, 2), 999, seed=0)

    def test_missing_ellipsoid_rejected(self):
        spheres = [_sphere(0, [0, 0, 0]), _sphere(1, [1, 0, 0])]
        with pytest.raises(OutOfRange):
            overlap_ratio(spheres, FocalSet(0b101, 3), 20_000, seed=0)

    def test_monotone_under_member_addition(self):
        """Adding a member can only shrink the IoU: intersection loses, union gains."""
        spheres = [
            _sphere(0, [0, 0, 0]),
            _sphere(1, [0.8, 0, 0]),
            _sphere(2, [0.4, 0.9, 0]),
        ]
        pair = overlap_ratio(spheres, FocalSet(0b011, 3), 100_000, seed=21)
        triple = overlap_ratio(spheres, FocalSet(0b111, 3), 100_000, seed=21)
        assert triple <= pair + 0.01


class TestSelectBudget:
    def _spheres(self):
        return [
            _sphere(0, [0, 0, 0]),
            _sphere(1, [0.5, 0, 0]),
            _sphere(2, [40, 0, 0]),
        ]

    def test_overlapping_pair_ranked_first(self):
        budget = select_budget(self._spheres(), k=1, mc=20_000, seed=5)
        nonsingle = [fs for fs in budget.sets if fs.cardinality > 1]
        assert len(nonsingle) == 1
        assert nonsingle[0].bits == 0b011

    def test_k_zero_gives_singletons(self):
        budget = select_budget(self._spheres(), k=0, mc=20_000, seed=5)
        assert budget.size == 3
        assert all(fs.cardinality == 1 for fs in budget.sets)

    def test_singletons_always_present(self):
        budget = select_budget(self._spheres(), k=2, mc=20_000, seed=5)
        assert budget.contains_all_singletons

    def test_deterministic_across_threads(self):
        budgets = [
            select_budget(self._spheres(), k=2, mc=20_000, seed=7, threads=t)
            for t in (1, 4)
        ]
        assert budgets[0].bits_array().tolist() == budgets[1].bits_array().tolist()

    def test_negative_k_rejected(self):
        with pytest.raises(OutOfRange):
            select_budget(self._spheres(), k=-1, mc=20_000, seed=0)

    def test_no_ellipsoids_rejected(self):
        with pytest.raises(TooFewPoints):
            select_budget([], k=1, mc=20_000, seed=0)


class TestBudgetByClustering:
    CORNERS = np.array(
        [
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [20.0, 20.0, 0.0],
            [21.0, 20.0, 0.0],
        ]
    )

    def test_two_clusters_give_two_pairs(self):
        budget = budget_by_clustering(self.CORNERS, k=2)
        bits = sorted(fs.bits for fs in budget.sets if fs.cardinality > 1)
        assert bits == [0b0011, 0b1100]
        assert budget.contains_all_singletons

    def test_k_one_gives_universal(self):
        budget = budget_by_clustering(self.CORNERS, k=1)
        multi = [fs for fs in budget.sets if fs.cardinality > 1]
        assert len(multi) == 1
        assert multi[0].bits == 0b1111

    def test_k_equal_n_gives_singletons_only(self):
        budget = budget_by_clustering(self.CORNERS, k=4)
        assert budget.size == 4
        assert all(fs.cardinality == 1 for fs in budget.sets)

    def test_single_class(self):
        budget = budget_by_clustering(np.zeros((1, 3)), k=1)
        assert budget.size == 1

    def test_rejects_bad_inputs(self):
        with pytest.raises(ShapeMismatch):
            budget_by_clustering(np.zeros((3, 2)), k=1)
        with pytest.raises(OutOfRange):
            budget_by_clustering(self.CORNERS, k=0)
        with pytest.raises(TooFewPoints):
            budget_by_clustering(self.CORNERS, k=5)
        with pytest.raises(TooManyClasses):
            budget_by_clustering(np.zeros((65, 3)), k=2)
        bad = self.CORNERS.copy()
        bad[0, 0] = np.nan
        with pytest.raises(OutOfRange):
            budget_by_clustering(bad, k=2)
