"""Comparator estimators: 10-fold cross-validation and the leave-one-out bootstrap."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import CLASSIFICATION, Dataset, MetricKind, evaluate
from .errors import InvalidInput, LearnerNonConvergence
from .learners import stratified_folds
from .resampling import MAX_REDRAWS

_RETRYABLE = (LearnerNonConvergence, FloatingPointError, np.linalg.LinAlgError)


def _rng(seed, *key) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=key))


def _tuned(learner, X, y, rng):
    return learner.tuned(X, y, rng) if hasattr(learner, "tuned") else learner


def _score(learner, X_train, y_train, X_test, y_test, metric, rng):
    with np.errstate(over="ignore", under="ignore"):
        model = learner.fit(X_train, y_train, rng)
        scores = np.asarray(model.predict(X_test), dtype=float)
    if not np.all(np.isfinite(scores)):
        raise FloatingPointError("non-finite predictions")
    return evaluate(metric, scores, y_test)


def cv10_point_estimate(dataset: Dataset, learner, metric, seed: int = 0,
                        n_folds: int = 10) -> float:
    """Mean of the per-fold metric over stratified ``n_folds``-fold cross-validation.

    The learner is tuned inside each training fold, as it would be when
    fitted on its own.
    """
    metric = MetricKind.parse(metric)
    classify = dataset.task == CLASSIFICATION
    if metric is MetricKind.AUC and not classify:
        raise InvalidInput("AUC needs a classification dataset")
    if dataset.n_samples < 2 * n_folds:
        raise InvalidInput(f"{dataset.n_samples} rows are too few for {n_folds}-fold CV")
    folds = stratified_folds(dataset.response, n_folds, _rng(seed, 0), classify)
    values = []
    for f in range(n_folds):
        test = folds == f
        y_test = dataset.response[test]
        if metric is MetricKind.AUC and y_test.min() == y_test.max():
            raise InvalidInput(f"fold {f} holds a single class")
        X_train, y_train = dataset.features[~test], dataset.response[~test]
        values.append(_score(learner, X_train, y_train, dataset.features[test], y_test,
                             metric, _rng(seed, 1, f)))
    return math.fsum(values) / n_folds


@dataclass
class BootstrapConfig:
    n_boot: int = 500
    alpha: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.n_boot < 1:
            raise InvalidInput("n_boot must be positive")
        if not 0 <= self.alpha < 1:
            raise InvalidInput("alpha must lie in [0, 1)")
        if self.n_boot < 100:
            warnings.warn(f"n_boot={self.n_boot} gives unstable bootstrap quantiles",
                          RuntimeWarning, stacklevel=2)


@dataclass
class LoobResult:
    point: float
    bound: float
    estimates: np.ndarray = field(repr=False)
    skipped: int = 0
    oob_fractions: np.ndarray = field(default=None, repr=False)

    def __iter__(self):
        yield self.point
        yield self.bound


def bootstrap_indices(dataset: Dataset, stratified: bool, rng) -> np.ndarray:
    """``N`` row indices drawn with replacement, within classes when stratified."""
    N = dataset.n_samples
    if not stratified:
        return rng.integers(0, N, N)
    parts = []
    for c in (1, 0):
        members = np.flatnonzero(dataset.response == c)
        parts.append(members[rng.integers(0, len(members), len(members))])
    return np.sort(np.concatenate(parts))


def loob(dataset: Dataset, learner, metric, config: BootstrapConfig = None) -> LoobResult:
    """Leave-one-out bootstrap: each resample's model is scored on its out-of-bag rows.

    Hyperparameters are tuned once on the full data.  A resample whose
    out-of-bag rows miss a class (or whose learner fails) is redrawn up to
    three times and then skipped.  The bound is the type-7 empirical
    ``alpha`` quantile of the resample estimates (``1 - alpha`` for PMSE).
    """
    config = config or BootstrapConfig()
    metric = MetricKind.parse(metric)
    classify = dataset.task == CLASSIFICATION
    if metric is MetricKind.AUC and not classify:
        raise InvalidInput("AUC needs a classification dataset")
    X, y = dataset.features, dataset.response
    N = dataset.n_samples
    learner = _tuned(learner, X, y, _rng(config.seed, N))

    estimates, fractions = [], []
    skipped = 0
    for b in range(config.n_boot):
        for attempt in range(MAX_REDRAWS + 1):
            rng = _rng(config.seed, b, attempt)
            inbag = bootstrap_indices(dataset, classify, rng)
            mask = np.ones(N, dtype=bool)
            mask[inbag] = False
            oob = np.flatnonzero(mask)
            if oob.size == 0 or (metric is MetricKind.AUC and np.ptp(y[oob]) == 0):
                continue
            try:
                value = _score(learner, X[inbag], y[inbag], X[oob], y[oob], metric, rng)
            except _RETRYABLE:
                continue
            estimates.append(value)
            fractions.append(oob.size / N)
            break
        else:
            skipped += 1
    if not estimates:
        raise InvalidInput("every bootstrap resample was skipped")
    estimates = np.asarray(estimates)
    q = config.alpha if metric is MetricKind.AUC else 1.0 - config.alpha
    bound = float(np.quantile(estimates, q, method="linear"))
    return LoobResult(point=math.fsum(estimates) / len(estimates), bound=bound,
                      estimates=estimates, skipped=skipped, oob_fractions=np.asarray(fractions))
