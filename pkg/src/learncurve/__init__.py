"""Learning-curve based estimation of predictive performance with confidence bounds.

A learner is evaluated by repeated hold-out on subsamples of increasing size,
a learning curve is fitted to the resulting trajectory, and its value at the
full sample size serves as point estimate.  A confidence bound comes from
the median of per-split bounds at a training size balancing curve bias and
test-set variance, optionally shifted by the curve's bias estimate.
"""

from .core import Dataset, LearningTrajectory, MetricKind, SplitEstimate, auc, pmse
from .curvefit import fit_logistic, fit_power_law, fit_spline
from .errors import LearnCurveError
from .estimator import BoundReport, EstimatorConfig, learn2evaluate
from .learners import LearnerSpec
from .resampling import SubsamplePlan, build_trajectory, repeated_holdout

__all__ = [
    "Dataset", "LearningTrajectory", "MetricKind", "SplitEstimate", "auc", "pmse",
    "fit_power_law", "fit_spline", "fit_logistic", "LearnCurveError", "BoundReport",
    "EstimatorConfig", "learn2evaluate", "LearnerSpec", "SubsamplePlan", "build_trajectory",
    "repeated_holdout",
]

__version__ = "0.1.0"
