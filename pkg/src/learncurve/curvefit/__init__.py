"""Learning-curve fitters: inverse power law, constrained spline, generalized logistic."""

from __future__ import annotations

import math

import numpy as np

from ..errors import FitFailure, InsufficientRange, InvalidInput
from .logistic import LogisticFit, fit_logistic, inflection_point
from .powerlaw import PowerLawFit, fit_power_law
from .spline import SplineFit, fit_spline

__all__ = [
    "PowerLawFit", "SplineFit", "LogisticFit", "fit_power_law", "fit_spline", "fit_logistic",
    "evaluate_curve", "refit_after_inflection", "inflection_point", "fit_curve", "FITTERS",
]

FITTERS = ("power_law", "spline", "auto_s_shape", "s_shape")


def evaluate_curve(fit, n):
    """Curve value at ``n > 0``; splines extend their boundary pieces beyond the data."""
    arr = np.asarray(n, dtype=float)
    if np.any(arr <= 0):
        raise InvalidInput("curve evaluation needs n > 0")
    out = fit.evaluate(arr)
    return float(out) if np.ndim(out) == 0 else out


def fit_curve(trajectory, family: str = "power_law", direction=None):
    if family == "power_law":
        return fit_power_law(trajectory, direction)
    if family == "spline":
        return fit_spline(trajectory, direction=direction)
    if family == "logistic":
        return fit_logistic(trajectory, direction)
    raise InvalidInput(f"unknown curve family {family!r}")


def refit_after_inflection(dataset, learner, metric, logistic: LogisticFit, plan,
                           alpha: float = 0.05, workers=None):
    """Rebuild the trajectory from the inflection point onward and fit a power law.

    The new grid keeps the plan's number of sizes over
    ``[max(n_1, ceil(inflection)), n_J]``.  Raises InsufficientRange when the
    inflection leaves fewer than two grid steps before ``N - min_test``.
    """
    from ..resampling import build_trajectory, default_sizes

    if logistic.degenerate or not math.isfinite(logistic.inflection):
        raise FitFailure("logistic fit is degenerate; inflection point undefined")
    sizes = plan.sizes
    J = len(sizes)
    N = dataset.n_samples
    n_last = N - plan.min_test
    step = (sizes[-1] - sizes[0]) / max(J - 1, 1)
    if logistic.inflection >= n_last - 2 * step:
        raise InsufficientRange(
            f"inflection at n={logistic.inflection:.1f} is too close to N={N}; "
            "acquire more samples")
    start = max(int(sizes[0]), math.ceil(logistic.inflection))
    if start > sizes[0]:
        plan = plan.with_sizes(default_sizes(N, J, start, int(sizes[-1]), plan.min_test))
    trajectory = build_trajectory(dataset, learner, metric, plan, alpha, workers)
    return trajectory, fit_power_law(trajectory)
