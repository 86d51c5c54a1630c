import numpy as np

from ..core import LearningTrajectory, MetricKind
from ..errors import InvalidInput


def as_points(trajectory, direction=None):
    """Sizes, estimates and an ``increasing`` flag from a trajectory or a tuple.

    Accepts a LearningTrajectory or ``(sizes, estimates)``; a bare tuple needs
    ``direction`` ('increasing' / 'decreasing' or a metric name).
    """
    if isinstance(trajectory, LearningTrajectory):
        n, y = trajectory.sizes, trajectory.estimates
        if direction is None:
            direction = trajectory.metric.direction
    else:
        n, y = trajectory
    n = np.asarray(n, dtype=float)
    y = np.asarray(y, dtype=float)
    if n.shape != y.shape or n.ndim != 1:
        raise InvalidInput("sizes and estimates must be matching vectors")
    if np.any(n <= 0) or np.any(np.diff(n) <= 0):
        raise InvalidInput("sizes must be positive and strictly increasing")
    if direction is None:
        direction = "increasing"
    if direction in ("auc", "pmse") or isinstance(direction, MetricKind):
        direction = MetricKind.parse(direction).direction
    if direction not in ("increasing", "decreasing"):
        raise InvalidInput(f"unknown direction {direction!r}")
    return n, y, direction == "increasing"
