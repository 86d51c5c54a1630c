"""Shape-constrained B-spline learning curves fitted by least absolute deviations."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import BSpline

from ..errors import FitFailure, InsufficientPoints
from . import simplex as _simplex
from ._common import as_points

DEFAULT_DEGREE = 2
MAX_INTERIOR_KNOTS = 5


def default_n_knots(J: int) -> int:
    return max(min(J - 2, MAX_INTERIOR_KNOTS), 0)


def knot_vector(sizes, degree: int, n_knots: int):
    """Clamped knot vector with interior knots at empirical quantiles of the sizes."""
    sizes = np.asarray(sizes, dtype=float)
    probs = np.arange(1, n_knots + 1) / (n_knots + 1)
    interior = np.quantile(sizes, probs) if n_knots else np.zeros(0)
    lo, hi = sizes[0], sizes[-1]
    t = np.concatenate([np.full(degree + 1, lo), interior, np.full(degree + 1, hi)])
    return interior, t


def design_matrix(t, degree: int, x) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    n_coef = len(t) - degree - 1
    out = np.empty((len(x), n_coef))
    for j in range(n_coef):
        c = np.zeros(n_coef)
        c[j] = 1.0
        out[:, j] = BSpline(t, c, degree, extrapolate=True)(x)
    return out


def shape_rows(F, sizes, increasing: bool) -> np.ndarray:
    """Rows ``G`` with ``G @ f <= 0`` encoding monotonicity and concavity (convexity).

    ``F`` maps parameters to curve values at ``sizes``; the returned rows act
    on the same parameters.
    """
    d = np.diff(np.asarray(sizes, dtype=float))
    mono = F[:-1] - F[1:]
    slopes = (F[1:] - F[:-1]) / d[:, None]
    curv = slopes[1:] - slopes[:-1]
    rows = np.vstack([mono, curv])
    return rows if increasing else -rows


@dataclass
class SplineFit:
    knots: np.ndarray
    degree: int
    theta: np.ndarray
    direction: str
    t: np.ndarray = field(repr=False)
    active: list = field(default_factory=list)
    l1_objective: float = 0.0

    family = "spline"

    def evaluate(self, n):
        out = BSpline(self.t, self.theta, self.degree, extrapolate=True)(
            np.asarray(n, dtype=float))
        return out

    def to_dict(self) -> dict:
        return {"family": self.family, "knots": self.knots.tolist(), "degree": self.degree,
                "theta": self.theta.tolist(), "direction": self.direction,
                "knot_vector": self.t.tolist(), "active": list(self.active),
                "l1_objective": self.l1_objective}


def fit_spline(trajectory, degree: int = DEFAULT_DEGREE, n_knots=None,
               direction=None) -> SplineFit:
    """L1 spline fit, monotone and concave (convex when decreasing) at the sizes.

    The absolute residuals are split into nonnegative parts, coefficients
    into positive and negative parts, and the program is solved by the dense
    simplex.  ``active`` lists the shape constraints binding at the optimum:
    ``("monotone", j)`` compares sizes j and j+1, ``("curvature", j)`` the
    slopes around size j (0-based).
    """
    n, y, increasing = as_points(trajectory, direction)
    J = len(n)
    if J < degree + 2:
        raise InsufficientPoints(f"spline of degree {degree} needs at least {degree + 2} sizes")
    if n_knots is None:
        n_knots = default_n_knots(J)
    interior, t = knot_vector(n, degree, n_knots)
    B = design_matrix(t, degree, n)
    m = B.shape[1]
    G = shape_rows(B, n, increasing)

    c = np.concatenate([np.zeros(2 * m), np.ones(2 * J)])
    A_eq = np.hstack([B, -B, np.eye(J), -np.eye(J)])
    A_ub = np.hstack([G, -G, np.zeros((len(G), 2 * J))])
    try:
        res = _simplex.simplex(c, A_ub, np.zeros(len(G)), A_eq, y)
    except (_simplex.Infeasible, _simplex.Unbounded, ArithmeticError) as exc:
        raise FitFailure(f"spline program failed: {exc}") from exc
    theta = res.x[:m] - res.x[m:2 * m]
    values = G @ theta
    active = []
    for i, v in enumerate(values):
        if abs(v) <= 1e-9:
            active.append(("monotone", i) if i < J - 1 else ("curvature", i - (J - 1) + 1))
    l1 = float(np.abs(y - B @ theta).sum())
    return SplineFit(knots=interior, degree=degree, theta=theta,
                     direction="increasing" if increasing else "decreasing", t=t,
                     active=active, l1_objective=l1)
