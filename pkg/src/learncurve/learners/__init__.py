"""Learners: penalized (logistic) regression and random forests.

Anything with ``fit(X, y, rng) -> model`` where ``model.predict(X)`` returns
real scores can be used as a learner.  A learner may additionally provide
``tuned(X, y, rng)`` returning a copy with its hyperparameters fixed; the
resampling code calls it once per subsample size and reuses the result for
every repeat at that size.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import special

from ..core import CLASSIFICATION, REGRESSION, Dataset
from ..errors import InvalidInput, LearnerNonConvergence
from .forest import ForestModel, fit_forest, resolve_mtry
from .linear import LinearModel, fit_linear, fit_path, lambda_grid

FAMILIES = ("ridge", "lasso", "random_forest")

__all__ = [
    "LearnerSpec", "LinearModel", "ForestModel", "ConstantLearner", "fit", "predict",
    "tune_penalty", "stratified_folds", "lambda_grid", "fit_path", "FAMILIES",
]


@dataclass(frozen=True)
class LearnerSpec:
    family: str = "ridge"
    task: str = CLASSIFICATION
    penalty: Union[float, str] = "auto"
    cv_folds: int = 10
    cv_repeats: int = 5
    grid_size: int = 50
    trees: int = 250
    mtry: Union[int, str] = "sqrt_p"
    min_leaf: int = 5
    bootstrap: bool = True
    tol: float = 1e-7
    max_sweeps: int = 10_000

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidInput(f"unknown learner family {self.family!r}")
        if self.task not in (CLASSIFICATION, REGRESSION):
            raise InvalidInput(f"unknown task {self.task!r}")
        if self.penalty != "auto":
            try:
                value = float(self.penalty)
            except (TypeError, ValueError):
                raise InvalidInput(f"penalty must be 'auto' or a number, got {self.penalty!r}")
            if value < 0:
                raise InvalidInput("penalty must be nonnegative")
            object.__setattr__(self, "penalty", value)

    @property
    def linear(self) -> bool:
        return self.family in ("ridge", "lasso")

    @property
    def needs_tuning(self) -> bool:
        return self.linear and self.penalty == "auto"

    def replace(self, **changes) -> "LearnerSpec":
        return dataclasses.replace(self, **changes)

    def tuned(self, X, y, rng=None) -> "LearnerSpec":
        if not self.needs_tuning:
            return self
        return self.replace(penalty=tune_penalty(self, X, y, rng))

    def fit(self, X, y, rng=None):
        return fit(self, X, y, rng)

    def describe(self) -> dict:
        return dataclasses.asdict(self)


class ConstantLearner:
    """Predicts the same score everywhere; a null reference learner."""

    def __init__(self, value: float = 0.0):
        self.value = float(value)

    def fit(self, X, y, rng=None):
        return self

    def predict(self, X):
        return np.full(np.asarray(X).shape[0], self.value)


def _xy(train, y=None):
    if isinstance(train, Dataset):
        return train.features, train.response
    return np.asarray(train, dtype=float), np.asarray(y, dtype=float)


def fit(spec: LearnerSpec, X, y=None, rng=None):
    """Fit the learner described by ``spec``; ``X`` may also be a Dataset."""
    X, y = _xy(X, y)
    if spec.family == "random_forest":
        return fit_forest(X, y, trees=spec.trees, mtry=spec.mtry, min_leaf=spec.min_leaf,
                          bootstrap=spec.bootstrap, rng=rng)
    if spec.needs_tuning:
        spec = spec.tuned(X, y, rng)
    return fit_linear(X, y, spec.family, spec.task, float(spec.penalty), spec.tol,
                      spec.max_sweeps)


def predict(model, features) -> np.ndarray:
    return np.asarray(model.predict(features), dtype=float)


def stratified_folds(y, n_folds: int, rng, stratify: bool) -> np.ndarray:
    """Fold labels 0..n_folds-1; per-class fold counts differ by at most one."""
    y = np.asarray(y)
    n = len(y)
    folds = np.empty(n, dtype=int)
    if stratify:
        order = np.concatenate([rng.permutation(np.flatnonzero(y == c)) for c in (1, 0)])
    else:
        order = rng.permutation(n)
    start = int(rng.integers(n_folds))
    folds[order] = (np.arange(n) + start) % n_folds
    return folds


def _cv_loss(task, y, pred):
    if task == CLASSIFICATION:
        p = np.clip(special.expit(pred), 1e-5, 1 - 1e-5)
        return -2.0 * (y[:, None] * np.log(p) + (1 - y[:, None]) * np.log1p(-p)).sum(axis=0)
    return ((y[:, None] - pred) ** 2).sum(axis=0)


def tune_penalty(spec: LearnerSpec, X, y=None, rng=None) -> float:
    """Median over ``cv_repeats`` of the CV-loss-minimizing penalty.

    Loss is binomial deviance for classification and squared error for
    regression; folds are stratified for classification.
    """
    if not spec.linear:
        raise InvalidInput("only ridge and lasso have a penalty to tune")
    X, y = _xy(X, y)
    n = len(y)
    if n < spec.cv_folds:
        raise InvalidInput(f"{n} training rows cannot fill {spec.cv_folds} CV folds")
    rng = np.random.default_rng(rng)
    grid = lambda_grid(X, y, spec.family, spec.grid_size)
    classify = spec.task == CLASSIFICATION
    chosen = []
    for _ in range(spec.cv_repeats):
        folds = stratified_folds(y, spec.cv_folds, rng, classify)
        loss = np.zeros(len(grid))
        for f in range(spec.cv_folds):
            test = folds == f
            coefs, intercepts, _ = fit_path(X[~test], y[~test], spec.family, spec.task, grid,
                                            spec.tol, spec.max_sweeps, partial=True)
            pred = X[test] @ coefs.T + intercepts
            loss += _cv_loss(spec.task, y[test], pred)
        # penalties past a non-converged fit in any fold are out of the running
        loss = np.where(np.isnan(loss), np.inf, loss)
        if not np.isfinite(loss).any():
            raise LearnerNonConvergence(f"{spec.family} path did not converge at any penalty")
        chosen.append(grid[int(np.argmin(loss))])
    return float(np.median(chosen))
