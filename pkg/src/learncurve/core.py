"""Domain types, performance metrics and per-split confidence bounds."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import InvalidInput

CLASSIFICATION = "classification"
REGRESSION = "regression"
TASKS = (CLASSIFICATION, REGRESSION)


class MetricKind(str, enum.Enum):
    """Supported performance metrics.

    AUC grows with the training size (lower confidence bounds), PMSE shrinks
    (upper confidence bounds).
    """

    AUC = "auc"
    PMSE = "pmse"

    @property
    def direction(self) -> str:
        return "increasing" if self is MetricKind.AUC else "decreasing"

    @property
    def increasing(self) -> bool:
        return self is MetricKind.AUC

    @classmethod
    def parse(cls, value) -> "MetricKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise InvalidInput(f"unknown metric {value!r}; expected 'auc' or 'pmse'") from None


@dataclass
class Dataset:
    features: np.ndarray
    response: np.ndarray
    task: str

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float)
        y = np.asarray(self.response, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if X.ndim != 2:
            raise InvalidInput("features must be a 2-d matrix")
        if self.task not in TASKS:
            raise InvalidInput(f"unknown task {self.task!r}")
        n, p = X.shape
        if n < 2 or p < 1:
            raise InvalidInput(f"need N >= 2 and p >= 1, got N={n}, p={p}")
        if y.shape != (n,):
            raise InvalidInput(f"response length {y.shape} does not match N={n}")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise InvalidInput("missing or non-finite values in dataset")
        if self.task == CLASSIFICATION:
            if not np.all((y == 0) | (y == 1)):
                raise InvalidInput("classification response must be coded 0/1")
            if y.min() == y.max():
                raise InvalidInput("classification response needs both classes")
        self.features = X
        self.response = y

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def n_pos(self) -> int:
        return int(self.response.sum()) if self.task == CLASSIFICATION else 0

    @property
    def n_neg(self) -> int:
        return self.n_samples - self.n_pos if self.task == CLASSIFICATION else 0

    def subset(self, indices) -> tuple[np.ndarray, np.ndarray]:
        idx = np.asarray(indices)
        return self.features[idx], self.response[idx]


@dataclass(frozen=True)
class SplitEstimate:
    """One hold-out evaluation: the metric on the complement of a training subset."""

    subsample_size: int
    repeat_index: int
    estimate: float
    bound: float
    test_pos: int = 0
    test_neg: int = 0

    def to_dict(self) -> dict:
        return {
            "subsample_size": self.subsample_size,
            "repeat_index": self.repeat_index,
            "estimate": self.estimate,
            "bound": self.bound,
            "test_pos": self.test_pos,
            "test_neg": self.test_neg,
        }


@dataclass
class LearningTrajectory:
    """Repeated hold-out estimates over an increasing grid of training sizes."""

    sizes: np.ndarray
    estimates: np.ndarray
    metric: MetricKind
    alpha: float = 0.05
    repeats: int = 0
    split_estimates: dict = field(default_factory=dict)
    hyperparameters: dict = field(default_factory=dict)

    def __post_init__(self):
        self.sizes = np.asarray(self.sizes, dtype=float)
        self.estimates = np.asarray(self.estimates, dtype=float)
        self.metric = MetricKind.parse(self.metric)
        if self.sizes.shape != self.estimates.shape or self.sizes.ndim != 1:
            raise InvalidInput("trajectory sizes and estimates must be matching vectors")
        if np.any(np.diff(self.sizes) <= 0):
            raise InvalidInput("trajectory sizes must be strictly increasing")

    @classmethod
    def from_points(cls, sizes, estimates, metric, alpha=0.05):
        return cls(sizes=sizes, estimates=estimates, metric=metric, alpha=alpha)

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.sizes.tolist(), self.estimates.tolist()))

    def __len__(self) -> int:
        return len(self.sizes)

    def bounds_at(self, n) -> list[float]:
        return [s.bound for s in self.split_estimates.get(int(n), [])]


def _check_binary(scores, labels):
    s = np.asarray(scores, dtype=float).ravel()
    y = np.asarray(labels).ravel()
    if s.shape != y.shape:
        raise InvalidInput("scores and labels differ in length")
    if not np.all(np.isfinite(s)):
        raise InvalidInput("scores must be finite")
    pos = y == 1
    n_pos = int(pos.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise InvalidInput("AUC needs at least one positive and one negative label")
    return s, pos, n_pos, n_neg


def auc(scores, labels) -> float:
    """Mann-Whitney AUC; tied positive/negative pairs count one half."""
    s, pos, n_pos, n_neg = _check_binary(scores, labels)
    ranks = stats.rankdata(s)
    # twice the U statistic is an exact integer, so the result is exact
    u2 = 2.0 * ranks[pos].sum() - n_pos * (n_pos + 1)
    return float(u2 / (2.0 * n_pos * n_neg))


def pmse(predictions, truths) -> float:
    pred = np.asarray(predictions, dtype=float).ravel()
    truth = np.asarray(truths, dtype=float).ravel()
    if pred.shape != truth.shape or pred.size < 1:
        raise InvalidInput("predictions and truths must be non-empty and of equal length")
    return float(np.mean((pred - truth) ** 2))


def bamber_variance(auc_hat: float, n_pos: int, n_neg: int) -> float:
    """Asymptotic variance of an AUC estimate from its value and class counts."""
    a = float(auc_hat)
    if not 0.0 <= a <= 1.0:
        raise InvalidInput(f"AUC estimate {auc_hat} outside [0, 1]")
    if n_pos < 1 or n_neg < 1:
        raise InvalidInput("class counts must be at least 1")
    a2 = a * a
    q1 = a * (1.0 - a)
    q2 = (n_pos - 1) * (a / (2.0 - a) - a2)
    q3 = (n_neg - 1) * (2.0 * a2 / (1.0 + a) - a2)
    return (q1 + q2 + q3) / (n_pos * n_neg)


def faber_variance(pmse_hat: float, n: int) -> float:
    if pmse_hat < 0 or n < 1:
        raise InvalidInput("need pmse >= 0 and n >= 1")
    return 2.0 * pmse_hat**2 / n


def _quantile(alpha: float) -> float:
    if not 0.0 < alpha < 0.5:
        raise InvalidInput(f"alpha must lie in (0, 0.5), got {alpha}")
    return float(stats.norm.ppf(1.0 - alpha))


def delong_variance(scores, labels) -> float:
    """DeLong variance of the empirical AUC.

    Falls back to the Bamber variance when a class has a single member, since
    the structural-component variance of that class is then undefined.
    """
    s, pos, n_pos, n_neg = _check_binary(scores, labels)
    if n_pos == 1 or n_neg == 1:
        return bamber_variance(auc(s, pos.astype(int)), n_pos, n_neg)
    r_all = stats.rankdata(s)
    r_pos = stats.rankdata(s[pos])
    r_neg = stats.rankdata(s[~pos])
    v10 = (r_all[pos] - r_pos) / n_neg
    v01 = 1.0 - (r_all[~pos] - r_neg) / n_pos
    return float(np.var(v10, ddof=1) / n_pos + np.var(v01, ddof=1) / n_neg)


def delong_lower_bound(scores, labels, alpha: float) -> float:
    z = _quantile(alpha)
    a = auc(scores, labels)
    v = delong_variance(scores, labels)
    return float(min(max(a - z * math.sqrt(max(v, 0.0)), 0.0), 1.0))


def pmse_upper_bound(predictions, truths, alpha: float) -> float:
    z = _quantile(alpha)
    pred = np.asarray(predictions, dtype=float).ravel()
    if pred.size < 2:
        raise InvalidInput("the PMSE upper bound needs at least two test cases")
    value = pmse(pred, truths)
    return value + z * math.sqrt(faber_variance(value, pred.size))


def count_subsets(N_pos: int, N_neg: int, n_pos: int, n_neg: int) -> int:
    """Number of distinct (balanced) training subsets, exact."""
    if not (0 <= n_pos <= N_pos and 0 <= n_neg <= N_neg):
        raise InvalidInput("subset counts must satisfy 0 <= n <= N per class")
    return math.comb(N_pos, n_pos) * math.comb(N_neg, n_neg)


def score_split(metric: MetricKind, predictions, truths, alpha: float):
    """Metric value, one-sided bound and test class counts for one hold-out set."""
    if metric is MetricKind.AUC:
        y = np.asarray(truths)
        n_pos = int((y == 1).sum())
        return (auc(predictions, y), delong_lower_bound(predictions, y, alpha),
                n_pos, len(y) - n_pos)
    return pmse(predictions, truths), pmse_upper_bound(predictions, truths, alpha), 0, 0


def evaluate(metric: MetricKind, predictions, truths) -> float:
    if metric is MetricKind.AUC:
        return auc(predictions, truths)
    return pmse(predictions, truths)
