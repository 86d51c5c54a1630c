import math

import numpy as np
import pytest

from learncurve.core import Dataset, MetricKind
from learncurve.errors import InfeasibleSplit, InvalidInput, LearnerNonConvergence, SplitFailure
from learncurve.learners import ConstantLearner, LearnerSpec
from learncurve.resampling import (SubsamplePlan, balanced_counts, build_trajectory,
                                   default_sizes, draw_split, repeated_holdout)


def separable(N=60, seed=0):
    rng = np.random.default_rng(seed)
    y = np.r_[np.ones(N // 2), np.zeros(N - N // 2)]
    X = rng.normal(size=(N, 3)) + 3.0 * y[:, None]
    return Dataset(X, y, "classification")


class TestDrawSplit:
    def test_tiny_balanced(self):
        d = Dataset(np.arange(4.0), [1, 1, 0, 0], "classification")
        for seed in range(20):
            split = draw_split(d, 2, True, seed)
            assert d.response[split.train_indices].sum() == 1

    def test_partition(self):
        d = Dataset(np.arange(10.0), np.arange(10.0), "regression")
        split = draw_split(d, 7, False, 1)
        both = np.sort(np.r_[split.train_indices, split.test_indices])
        assert np.array_equal(both, np.arange(10))
        assert len(split.train_indices) == 7

    def test_inclusion_frequency_uniform(self):
        d = Dataset(np.arange(10.0), np.arange(10.0), "regression")
        rng = np.random.default_rng(5)
        counts = np.zeros(10)
        for _ in range(10_000):
            counts[draw_split(d, 5, False, rng).train_indices] += 1
        assert np.all(np.abs(counts / 10_000 - 0.5) <= 0.02)

    def test_balance_property(self):
        rng = np.random.default_rng(2)
        y = (rng.random(73) < 0.3).astype(float)
        d = Dataset(rng.normal(size=(73, 2)), y, "classification")
        prevalence = y.mean()
        for n in (10, 25, 50, 63):
            split = draw_split(d, n, True, rng)
            train_y = y[split.train_indices]
            assert abs(train_y.mean() - prevalence) <= 1 / n
            test_y = y[split.test_indices]
            assert 0 < train_y.sum() < n and 0 < test_y.sum() < len(test_y)

    def test_infeasible(self):
        d = Dataset(np.arange(4.0), [1, 0, 0, 0], "classification")
        with pytest.raises(InfeasibleSplit):
            draw_split(d, 2, True, 0)
        with pytest.raises(InfeasibleSplit):
            draw_split(d, 4, False, 0)

    def test_balanced_counts_clamp(self):
        assert balanced_counts(2, 8, 5) == (1, 4)
        with pytest.raises(InfeasibleSplit):
            balanced_counts(9, 1, 5)


class TestSizes:
    def test_default_grid(self):
        sizes = default_sizes(100)
        assert sizes[0] == 20 and sizes[-1] == 90 and len(sizes) == 10
        assert np.all(np.diff(sizes) > 0)

    def test_single_size(self):
        assert default_sizes(100, count=1).tolist() == [90]

    def test_too_large(self):
        with pytest.raises(InvalidInput):
            default_sizes(100, n_max=95)

    def test_plan_validation(self):
        with pytest.raises(InvalidInput):
            SubsamplePlan([30, 20])
        plan = SubsamplePlan([20, 95])
        with pytest.raises(InvalidInput):
            plan.validate(separable(100))

    def test_plan_forces_balance_by_task(self):
        d = Dataset(np.arange(30.0), np.arange(30.0), "regression")
        plan = SubsamplePlan([10, 20], balanced=True)
        plan.validate(d)
        assert plan.balanced is False


class TestRepeatedHoldout:
    def test_constant_learner(self):
        splits = repeated_holdout(separable(), ConstantLearner(), "auc", 30, 5)
        assert [s.estimate for s in splits] == [0.5] * 5

    def test_single_repeat(self):
        d = separable()
        plan = SubsamplePlan([30], repeats=1, seed=4)
        t = build_trajectory(d, LearnerSpec("ridge", penalty=1.0), "auc", plan)
        assert t.estimates[0] == t.split_estimates[30][0].estimate

    def test_split_records(self):
        splits = repeated_holdout(separable(), LearnerSpec("ridge", penalty=1.0), "auc", 30, 4,
                                  seed=3)
        assert [s.repeat_index for s in splits] == [0, 1, 2, 3]
        assert all(s.bound <= s.estimate for s in splits)
        assert all(s.test_pos + s.test_neg == 30 for s in splits)

    def test_stability_across_seeds(self):
        d = separable(80, seed=1)
        learner = LearnerSpec("ridge", penalty=1.0)
        a = np.mean([s.estimate for s in repeated_holdout(d, learner, "auc", 40, 50, seed=1)])
        b = np.mean([s.estimate for s in repeated_holdout(d, learner, "auc", 40, 50, seed=2)])
        assert abs(a - b) <= 0.01

    def test_pmse(self):
        rng = np.random.default_rng(0)
        X = rng.normal(size=(50, 2))
        d = Dataset(X, X @ [1.0, -1.0] + 0.1 * rng.normal(size=50), "regression")
        splits = repeated_holdout(d, LearnerSpec("ridge", "regression", penalty=0.0), "pmse",
                                  30, 3)
        assert all(s.bound >= s.estimate for s in splits)

    def test_auc_needs_classification(self):
        d = Dataset(np.arange(30.0), np.arange(30.0), "regression")
        with pytest.raises(InvalidInput):
            repeated_holdout(d, ConstantLearner(), MetricKind.AUC, 10, 2)

    def test_failure_after_redraws(self):
        class Failing:
            def fit(self, X, y, rng=None):
                raise LearnerNonConvergence("never converges")

        with pytest.raises(SplitFailure) as info:
            repeated_holdout(separable(), Failing(), "auc", 30, 2)
        assert info.value.size == 30 and info.value.repeat == 0

    def test_redraw_recovers(self):
        calls = []

        class Flaky:
            def fit(self, X, y, rng=None):
                calls.append(1)
                if len(calls) == 1:
                    raise LearnerNonConvergence("first draw fails")
                return ConstantLearner()

        splits = repeated_holdout(separable(), Flaky(), "auc", 30, 1)
        assert splits[0].estimate == 0.5 and len(calls) == 2


class TestTrajectory:
    def test_mean_consistency_and_determinism(self):
        d = separable(60, seed=2)
        plan = SubsamplePlan(default_sizes(60, count=4), repeats=6, seed=9)
        learner = LearnerSpec("ridge", cv_repeats=1)
        t1 = build_trajectory(d, learner, "auc", plan)
        t2 = build_trajectory(d, learner, "auc", plan)
        assert np.array_equal(t1.estimates, t2.estimates)
        for n, est in zip(t1.sizes, t1.estimates):
            splits = t1.split_estimates[int(n)]
            assert est == math.fsum(s.estimate for s in splits) / len(splits)
        assert set(t1.hyperparameters) == set(int(n) for n in plan.sizes)

    def test_subset_of_grid_recomputes_identically(self):
        d = separable(60, seed=2)
        learner = LearnerSpec("ridge", penalty=0.5)
        full = build_trajectory(d, learner, "auc", SubsamplePlan([20, 35, 50], repeats=4, seed=1))
        part = build_trajectory(d, learner, "auc", SubsamplePlan([35], repeats=4, seed=1))
        assert full.split_estimates[35] == part.split_estimates[35]

    def test_workers_do_not_change_results(self):
        d = separable(60, seed=3)
        learner = LearnerSpec("ridge", penalty=0.5)
        plan = SubsamplePlan([20, 35, 50], repeats=4, seed=1)
        serial = build_trajectory(d, learner, "auc", plan, workers=1)
        parallel = build_trajectory(d, learner, "auc", plan, workers=2)
        assert serial.split_estimates == parallel.split_estimates
        assert np.array_equal(serial.estimates, parallel.estimates)
