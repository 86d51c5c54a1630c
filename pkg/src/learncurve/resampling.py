"""Balanced subsampling, repeated hold-out estimation and learning trajectories."""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np

from . import _parallel
from .core import (CLASSIFICATION, Dataset, LearningTrajectory, MetricKind, SplitEstimate,
                   score_split)
from .errors import InfeasibleSplit, InvalidInput, LearnerNonConvergence, SplitFailure

MAX_REDRAWS = 3
DEFAULT_MIN_TEST = 10

# failures that trigger a fresh draw of the training subset
_RETRYABLE = (LearnerNonConvergence, FloatingPointError, np.linalg.LinAlgError)


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def split_rng(seed: int, n: int, k: int, attempt: int = 0) -> np.random.Generator:
    """Random stream for repeat ``k`` at size ``n``; independent of evaluation order."""
    key = (int(n), int(k)) if attempt == 0 else (int(n), int(k), int(attempt))
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=key))


def tuning_rng(seed: int, n: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(n),)))


def default_sizes(N: int, count: int = 10, n_min: int = 20, n_max=None,
                  min_test: int = DEFAULT_MIN_TEST) -> np.ndarray:
    """``count`` integer sizes spread evenly over ``[n_min, n_max]`` (default ``N - min_test``)."""
    if n_max is None:
        n_max = N - min_test
    if n_max > N - min_test:
        raise InvalidInput(f"largest subsample size {n_max} leaves fewer than {min_test} test rows")
    if not 1 <= n_min <= n_max:
        raise InvalidInput(f"invalid size range [{n_min}, {n_max}]")
    if count == 1:
        return np.array([int(n_max)])
    sizes = np.unique([_round_half_up(v) for v in np.linspace(n_min, n_max, count)])
    return sizes.astype(int)


@dataclass
class SubsamplePlan:
    sizes: np.ndarray
    repeats: int = 50
    balanced: bool = True
    seed: int = 0
    min_test: int = DEFAULT_MIN_TEST

    def __post_init__(self):
        self.sizes = np.asarray(self.sizes, dtype=int).ravel()
        if self.sizes.size == 0 or np.any(np.diff(self.sizes) <= 0):
            raise InvalidInput("plan sizes must be strictly increasing")
        if self.repeats < 1:
            raise InvalidInput("repeats must be positive")

    @classmethod
    def for_dataset(cls, dataset: Dataset, count=10, n_min=20, n_max=None, repeats=50, seed=0,
                    min_test=DEFAULT_MIN_TEST):
        sizes = default_sizes(dataset.n_samples, count, n_min, n_max, min_test)
        return cls(sizes=sizes, repeats=repeats, balanced=dataset.task == CLASSIFICATION,
                   seed=seed, min_test=min_test)

    def validate(self, dataset: Dataset):
        N = dataset.n_samples
        if self.sizes[-1] > N - self.min_test:
            raise InvalidInput(
                f"largest size {self.sizes[-1]} exceeds N - min_test = {N - self.min_test}")
        if self.sizes[0] < 2:
            raise InvalidInput("subsample sizes must be at least 2")
        # balancing is a property of the task, not a free choice
        self.balanced = dataset.task == CLASSIFICATION

    def with_sizes(self, sizes) -> "SubsamplePlan":
        return SubsamplePlan(sizes=sizes, repeats=self.repeats, balanced=self.balanced,
                             seed=self.seed, min_test=self.min_test)


@dataclass
class Split:
    train_indices: np.ndarray
    test_indices: np.ndarray = field(repr=False)


def balanced_counts(N_pos: int, N_neg: int, n: int) -> tuple[int, int]:
    """Training class counts for a balanced subsample of size ``n``.

    Positives follow the full-data prevalence, rounded, then clamped so that
    training and test sets both keep at least one member of each class.
    """
    N = N_pos + N_neg
    lo = max(1, n - (N_neg - 1))
    hi = min(N_pos - 1, n - 1)
    if lo > hi:
        raise InfeasibleSplit(
            f"size {n} cannot keep both classes in train and test ({N_pos} pos, {N_neg} neg)")
    n_pos = min(max(_round_half_up(n * N_pos / N), lo), hi)
    return n_pos, n - n_pos


def draw_split(dataset: Dataset, n: int, balanced: bool, rng) -> Split:
    rng = np.random.default_rng(rng)
    N = dataset.n_samples
    if not 1 <= n < N:
        raise InfeasibleSplit(f"training size {n} must lie in [1, {N - 1}]")
    if balanced:
        if dataset.task != CLASSIFICATION:
            raise InvalidInput("balanced splits need a binary response")
        pos = np.flatnonzero(dataset.response == 1)
        neg = np.flatnonzero(dataset.response == 0)
        n_pos, n_neg = balanced_counts(len(pos), len(neg), n)
        train = np.concatenate([rng.choice(pos, n_pos, replace=False),
                                rng.choice(neg, n_neg, replace=False)])
    else:
        train = rng.choice(N, n, replace=False)
    train = np.sort(train)
    mask = np.ones(N, dtype=bool)
    mask[train] = False
    return Split(train_indices=train, test_indices=np.flatnonzero(mask))


def _evaluate_split(dataset, learner, metric, n, k, alpha, seed, balanced):
    last = None
    for attempt in range(MAX_REDRAWS + 1):
        rng = split_rng(seed, n, k, attempt)
        split = draw_split(dataset, n, balanced, rng)
        X_train, y_train = dataset.subset(split.train_indices)
        X_test, y_test = dataset.subset(split.test_indices)
        try:
            with np.errstate(over="ignore", under="ignore"):
                model = learner.fit(X_train, y_train, rng)
                scores = np.asarray(model.predict(X_test), dtype=float)
            if not np.all(np.isfinite(scores)):
                raise FloatingPointError("non-finite predictions")
        except _RETRYABLE as exc:
            last = exc
            continue
        est, bound, n_pos, n_neg = score_split(metric, scores, y_test, alpha)
        return SplitEstimate(int(n), int(k), est, bound, n_pos, n_neg)
    raise SplitFailure(f"learner failed on {MAX_REDRAWS + 1} draws: {last}", n, k)


def tune_for_size(dataset: Dataset, learner, n: int, seed: int, balanced: bool):
    """Fix the learner's hyperparameters once for training size ``n``.

    Tuning runs on its own subsample of size ``n`` drawn from a stream keyed
    by ``(seed, n)``.
    """
    if not hasattr(learner, "tuned"):
        return learner
    rng = tuning_rng(seed, n)
    split = draw_split(dataset, n, balanced, rng)
    X, y = dataset.subset(split.train_indices)
    return learner.tuned(X, y, rng)


def repeated_holdout(dataset: Dataset, learner, metric, n: int, K: int, alpha: float = 0.05,
                     seed: int = 0, balanced=None, tune: bool = True) -> list[SplitEstimate]:
    """``K`` hold-out evaluations of ``learner`` trained on subsamples of size ``n``."""
    metric = MetricKind.parse(metric)
    if balanced is None:
        balanced = dataset.task == CLASSIFICATION
    if metric is MetricKind.AUC and dataset.task != CLASSIFICATION:
        raise InvalidInput("AUC needs a classification dataset")
    if tune:
        learner = tune_for_size(dataset, learner, n, seed, balanced)
    return [_evaluate_split(dataset, learner, metric, n, k, alpha, seed, balanced)
            for k in range(K)]


def _size_task(n, dataset, learner, metric, K, alpha, seed, balanced):
    tuned = tune_for_size(dataset, learner, n, seed, balanced)
    splits = repeated_holdout(dataset, tuned, metric, n, K, alpha, seed, balanced, tune=False)
    params = {"penalty": tuned.penalty} if getattr(tuned, "linear", False) else {}
    return splits, params


def build_trajectory(dataset: Dataset, learner, metric, plan: SubsamplePlan,
                     alpha: float = 0.05, workers=None) -> LearningTrajectory:
    """Repeated hold-out at every plan size, averaged into a learning trajectory."""
    metric = MetricKind.parse(metric)
    plan.validate(dataset)
    task = functools.partial(_size_task, dataset=dataset, learner=learner, metric=metric,
                             K=plan.repeats, alpha=alpha, seed=plan.seed,
                             balanced=plan.balanced)
    results = _parallel.ordered_map(task, [int(n) for n in plan.sizes], workers)
    split_estimates = {}
    hyper = {}
    means = []
    for n, (splits, params) in zip(plan.sizes, results):
        split_estimates[int(n)] = splits
        hyper[int(n)] = params
        means.append(math.fsum(s.estimate for s in splits) / len(splits))
    return LearningTrajectory(sizes=plan.sizes.astype(float), estimates=np.array(means),
                              metric=metric, alpha=alpha, repeats=plan.repeats,
                              split_estimates=split_estimates, hyperparameters=hyper)
