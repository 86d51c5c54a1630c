"""Point estimate at the full sample size and median-aggregated confidence bounds.

The pipeline: repeated hold-out trajectory -> fitted learning curve ->
``f(N)`` -> training size ``n_opt`` trading curve bias against test-set
variance -> median of the per-split bounds at ``n_opt`` -> bias-corrected
bound ``bound + f(N) - f(n_opt)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import (CLASSIFICATION, Dataset, LearningTrajectory, MetricKind, bamber_variance,
                   faber_variance)
from .curvefit import (FITTERS, LogisticFit, evaluate_curve, fit_logistic, fit_power_law,
                       fit_spline, refit_after_inflection)
from .errors import InvalidInput
from .resampling import DEFAULT_MIN_TEST, SubsamplePlan, build_trajectory, repeated_holdout

SELECTION_RULES = ("mse_min", "bias_margin")
DEFAULT_MARGIN = 0.02


@dataclass
class VarianceModel:
    """Asymptotic variance of a hold-out estimate on the ``N - n`` rows left for testing."""

    metric: MetricKind
    class_prevalence: Optional[float] = None

    @classmethod
    def for_dataset(cls, dataset: Dataset, metric) -> "VarianceModel":
        metric = MetricKind.parse(metric)
        prevalence = dataset.n_pos / dataset.n_samples if metric is MetricKind.AUC else None
        return cls(metric, prevalence)

    def test_counts(self, test_size: int) -> tuple[int, int]:
        n_pos = int(math.floor(test_size * self.class_prevalence + 0.5))
        n_pos = min(max(n_pos, 1), test_size - 1)
        return n_pos, test_size - n_pos

    def variance(self, value: float, test_size: int) -> float:
        if test_size < 1:
            raise InvalidInput("test set is empty")
        if self.metric is MetricKind.AUC:
            if self.class_prevalence is None:
                raise InvalidInput("AUC variance needs the class prevalence")
            n_pos, n_neg = self.test_counts(test_size)
            return bamber_variance(min(max(value, 0.0), 1.0), n_pos, n_neg)
        return faber_variance(max(value, 0.0), test_size)


@dataclass
class BoundReport:
    point_estimate: float
    n_opt: int
    bound: float
    bound_bc: float
    empirical_bias: float
    alpha: float
    selection_rule: str
    curve: object
    metric: MetricKind = MetricKind.AUC
    n_total: int = 0
    margin_violated: bool = False
    fresh_holdout: bool = False
    split_bounds: list = field(default_factory=list)
    logistic: Optional[LogisticFit] = None
    trajectory: Optional[LearningTrajectory] = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "metric": self.metric.value,
            "n_total": self.n_total,
            "point_estimate": self.point_estimate,
            "n_opt": self.n_opt,
            "bound": self.bound,
            "bound_bc": self.bound_bc,
            "empirical_bias": self.empirical_bias,
            "alpha": self.alpha,
            "selection_rule": self.selection_rule,
            "margin_violated": self.margin_violated,
            "fresh_holdout": self.fresh_holdout,
            "split_bounds": list(self.split_bounds),
            "curve": self.curve.to_dict(),
            "logistic": self.logistic.to_dict() if self.logistic is not None else None,
        }


@dataclass
class EstimatorConfig:
    fitter: str = "power_law"
    selection: str = "mse_min"
    margin_fraction: float = DEFAULT_MARGIN
    alpha: float = 0.05
    n_min: int = 20
    count: int = 10
    n_max: Optional[int] = None
    repeats: int = 50
    seed: int = 0
    min_test: int = DEFAULT_MIN_TEST
    workers: Optional[int] = None

    def __post_init__(self):
        if self.fitter not in FITTERS:
            raise InvalidInput(f"unknown fitter {self.fitter!r}; choose from {FITTERS}")
        if self.selection not in SELECTION_RULES:
            raise InvalidInput(f"unknown selection rule {self.selection!r}")
        if not 0 < self.alpha < 0.5:
            raise InvalidInput("alpha must lie in (0, 0.5)")
        if not 0 < self.margin_fraction <= 1:
            raise InvalidInput("margin fraction must lie in (0, 1]")
        if self.repeats < 2:
            raise InvalidInput("at least two repeats per size are needed for a median bound")


def _clamp(metric: MetricKind, value: float) -> float:
    if metric is MetricKind.AUC:
        return min(max(value, 0.0), 1.0)
    return max(value, 0.0)


def point_estimate(curve, N: int, metric=MetricKind.AUC) -> float:
    return _clamp(MetricKind.parse(metric), float(evaluate_curve(curve, N)))


def _bias(curve, N, grid, increasing):
    fN = float(evaluate_curve(curve, N))
    f = np.asarray(evaluate_curve(curve, np.asarray(grid, dtype=float)), dtype=float)
    return (fN - f) if increasing else (f - fN), f


def mse_table(curve, N: int, variance_model: VarianceModel, grid):
    """Squared bias, variance and their sum for every candidate training size."""
    grid = np.asarray(list(grid), dtype=int)
    if grid.size == 0:
        raise InvalidInput("candidate grid is empty")
    if grid.max() >= N:
        raise InvalidInput("candidate sizes must leave a test set")
    bias, f = _bias(curve, N, grid, variance_model.metric.increasing)
    var = np.array([variance_model.variance(float(v), int(N - n)) for v, n in zip(f, grid)])
    return grid, bias**2, var, bias**2 + var


def select_n_opt_mse(curve, N: int, variance_model: VarianceModel, grid) -> int:
    """Size minimizing squared curve bias plus test-set variance; ties go to the smaller size."""
    grid, _, _, total = mse_table(curve, N, variance_model, grid)
    return int(grid[int(np.argmin(total))])


def select_n_opt_bias_margin(curve, N: int, margin_fraction: float = DEFAULT_MARGIN, grid=(),
                             metric=MetricKind.AUC) -> tuple[int, bool]:
    """Smallest size whose bias is within ``margin_fraction * |f(N)|``.

    Returns ``(n, violated)``; when no size qualifies the largest one is
    returned with ``violated=True``.
    """
    if not 0 < margin_fraction <= 1:
        raise InvalidInput("margin fraction must lie in (0, 1]")
    grid = np.asarray(list(grid), dtype=int)
    if grid.size == 0:
        raise InvalidInput("candidate grid is empty")
    metric = MetricKind.parse(metric)
    bias, _ = _bias(curve, N, grid, metric.increasing)
    margin = margin_fraction * abs(float(evaluate_curve(curve, N)))
    ok = np.flatnonzero(bias <= margin)
    if ok.size == 0:
        return int(grid[-1]), True
    return int(grid[ok[0]]), False


def median_bound(bounds, metric=MetricKind.AUC) -> float:
    """Median of per-split bounds: lower median for lower bounds, upper median for upper."""
    values = np.sort(np.asarray([float(b) for b in bounds]))
    K = len(values)
    if K < 2:
        raise InvalidInput("a median bound needs at least two split bounds")
    if MetricKind.parse(metric) is MetricKind.AUC:
        return float(values[math.ceil(K / 2) - 1])
    return float(values[K // 2])


def _fit(trajectory, fitter):
    if fitter == "spline":
        return fit_spline(trajectory)
    return fit_power_law(trajectory)


def _s_shape_curve(dataset, learner, metric, trajectory, plan, alpha, workers, force=False):
    """Logistic fit first; refit the power law past the inflection when it lies inside the grid.

    With ``force`` the refit always runs and its errors propagate.
    """
    if len(trajectory) < 6 and not force:
        return trajectory, fit_power_law(trajectory), None
    logistic = fit_logistic(trajectory)
    sizes = plan.sizes
    step = (sizes[-1] - sizes[0]) / max(len(sizes) - 1, 1)
    if not force and (logistic.degenerate or not logistic.inflection > sizes[0] + step):
        return trajectory, fit_power_law(trajectory), logistic
    refit, curve = refit_after_inflection(dataset, learner, metric, logistic, plan, alpha,
                                          workers)
    return refit, curve, logistic


def learn2evaluate(dataset: Dataset, learner, metric, config: Optional[EstimatorConfig] = None,
                   trajectory: Optional[LearningTrajectory] = None) -> BoundReport:
    """Full pipeline from data to point estimate and (bias-corrected) bound.

    A precomputed ``trajectory`` built with the same plan may be passed to
    skip the resampling step.
    """
    config = config or EstimatorConfig()
    metric = MetricKind.parse(metric)
    if metric is MetricKind.AUC and dataset.task != CLASSIFICATION:
        raise InvalidInput("AUC needs a classification dataset")
    N = dataset.n_samples
    plan = SubsamplePlan.for_dataset(dataset, count=config.count, n_min=config.n_min,
                                     n_max=config.n_max, repeats=config.repeats,
                                     seed=config.seed, min_test=config.min_test)
    if trajectory is None:
        trajectory = build_trajectory(dataset, learner, metric, plan, config.alpha,
                                      config.workers)
    logistic = None
    if config.fitter in ("auto_s_shape", "s_shape"):
        trajectory, curve, logistic = _s_shape_curve(dataset, learner, metric, trajectory, plan,
                                                     config.alpha, config.workers,
                                                     force=config.fitter == "s_shape")
    else:
        curve = _fit(trajectory, config.fitter)

    estimate = point_estimate(curve, N, metric)
    grid = range(int(trajectory.sizes[0]), int(trajectory.sizes[-1]) + 1)
    violated = False
    if config.selection == "mse_min":
        n_opt = select_n_opt_mse(curve, N, VarianceModel.for_dataset(dataset, metric), grid)
    else:
        n_opt, violated = select_n_opt_bias_margin(curve, N, config.margin_fraction, grid, metric)

    fresh = n_opt not in trajectory.split_estimates
    if fresh:
        splits = repeated_holdout(dataset, learner, metric, n_opt, config.repeats, config.alpha,
                                  config.seed)
    else:
        splits = trajectory.split_estimates[n_opt]
    split_bounds = [s.bound for s in splits]
    bound = median_bound(split_bounds, metric)
    bias = estimate - _clamp(metric, float(evaluate_curve(curve, n_opt)))
    return BoundReport(point_estimate=estimate, n_opt=int(n_opt), bound=bound,
                       bound_bc=bound + bias, empirical_bias=bias, alpha=config.alpha,
                       selection_rule=config.selection, curve=curve, metric=metric, n_total=N,
                       margin_violated=violated, fresh_holdout=fresh, split_bounds=split_bounds,
                       logistic=logistic, trajectory=trajectory)
