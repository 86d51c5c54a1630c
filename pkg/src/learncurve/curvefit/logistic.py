"""Generalized logistic (Richards) curves for S-shaped trajectories."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from ..errors import InsufficientPoints
from ._common import as_points


@dataclass
class LogisticFit:
    """``A + (Kp - A) / (1 + exp(-B (n - M_loc)))**(1/nu)``."""

    A: float
    Kp: float
    B: float
    M_loc: float
    nu: float
    inflection: float
    residual_sse: float = 0.0
    degenerate: bool = False

    family = "logistic"

    def evaluate(self, n):
        return richards(np.asarray(n, dtype=float), self.A, self.Kp, self.B, self.M_loc, self.nu)

    def to_dict(self) -> dict:
        return {"family": self.family, "A": self.A, "Kp": self.Kp, "B": self.B,
                "M_loc": self.M_loc, "nu": self.nu, "inflection": self.inflection,
                "residual_sse": self.residual_sse, "degenerate": self.degenerate}


def richards(n, A, K, B, M, nu):
    # (1 + e^{-B(n-M)})^{-1/nu} evaluated in log space
    return A + (K - A) * np.exp(-np.logaddexp(0.0, -B * (n - M)) / nu)


def inflection_point(M, B, nu) -> float:
    return M - math.log(nu) / B


def _residuals(params, u, y):
    A, K, b, M, v = params
    return richards(u, A, K, math.exp(b), M, math.exp(v)) - y


def fit_logistic(trajectory, direction=None) -> LogisticFit:
    """Least-squares generalized logistic fit with its inflection point.

    Sizes are rescaled to zero mean and unit spread; the growth rate and
    asymmetry are optimized on the log scale so they stay positive.  The fit
    is flagged degenerate (inflection NaN) when the curve is flat.
    """
    n, y, _ = as_points(trajectory, direction)
    J = len(n)
    if J < 6:
        raise InsufficientPoints("a five-parameter logistic fit needs at least six sizes")
    center = float(n.mean())
    scale = float(n.std()) or 1.0
    u = (n - center) / scale
    lo, hi = float(np.mean(y[:2])), float(np.mean(y[-2:]))

    best = None
    for m0, b0, v0 in itertools.product((-0.75, 0.0, 0.75), (1.0, 4.0), (0.5, 1.0, 2.0)):
        x0 = np.array([lo, hi, math.log(b0), m0, math.log(v0)])
        try:
            res = optimize.least_squares(_residuals, x0, args=(u, y), method="lm",
                                         xtol=1e-14, ftol=1e-14, gtol=1e-14, max_nfev=4000)
        except (ValueError, FloatingPointError):
            continue
        x = res.x
        if not np.all(np.isfinite(x)) or abs(x[2]) > 30 or abs(x[4]) > 30:
            continue
        sse = float(np.sum(_residuals(x, u, y) ** 2))
        if best is None or sse < best[0] - 1e-15:
            best = (sse, x)

    spread = float(np.ptp(y))
    if best is None:
        return LogisticFit(lo, hi, 0.0, center, 1.0, float("nan"),
                           float(np.sum((y - y.mean()) ** 2)), degenerate=True)
    sse, x = best
    A, K, b, M, v = (float(val) for val in x)
    B_u, nu = math.exp(b), math.exp(v)
    B = B_u / scale
    M_loc = center + scale * M
    infl = inflection_point(M_loc, B, nu)
    flat = bool(abs(K - A) <= 1e-8 * max(1.0, abs(A)) or spread <= 1e-12)
    return LogisticFit(A=A, Kp=K, B=B, M_loc=M_loc, nu=nu,
                       inflection=float("nan") if flat else infl, residual_sse=sse,
                       degenerate=flat)
