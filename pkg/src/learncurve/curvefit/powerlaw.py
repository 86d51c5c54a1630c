"""Inverse power-law learning curves, fitted by bounded multi-start least squares."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from ..errors import InsufficientPoints
from ._common import as_points

GAMMA_STARTS = (0.3, 0.7, 1.0, 1.5)
MAX_ITER = 2000
XATOL = 1e-8


@dataclass
class PowerLawFit:
    """``delta - beta * n**-gamma`` (increasing) or ``delta + beta * n**-gamma``."""

    delta: float
    beta: float
    gamma: float
    direction: str = "increasing"
    residual_sse: float = 0.0
    degenerate: bool = False

    family = "power_law"

    @property
    def sign(self) -> float:
        return -1.0 if self.direction == "increasing" else 1.0

    def evaluate(self, n):
        n = np.asarray(n, dtype=float)
        return self.delta + self.sign * self.beta * n ** (-self.gamma)

    def derivative(self, n, order: int = 1):
        n = np.asarray(n, dtype=float)
        g = self.gamma
        if order == 1:
            return -self.sign * self.beta * g * n ** (-g - 1)
        return self.sign * self.beta * g * (g + 1) * n ** (-g - 2)

    def to_dict(self) -> dict:
        return {"family": self.family, "delta": self.delta, "beta": self.beta,
                "gamma": self.gamma, "direction": self.direction,
                "residual_sse": self.residual_sse, "degenerate": self.degenerate}


def _bounds(increasing: bool):
    delta = (0.5, 1.0) if increasing else (0.0, np.inf)
    return [delta, (0.0, np.inf), (0.0, np.inf)]


def _objective(params, n, y, sign):
    delta, beta, gamma = params
    r = delta + sign * beta * n ** (-gamma) - y
    return float(np.mean(r * r))


def _profile(gamma, n, y, sign, dlo, dhi):
    """Exact bounded least-squares (delta, beta) for a fixed decay rate."""
    x = sign * n ** (-gamma)
    cands = []
    A = np.column_stack([np.ones_like(x), x])
    sol, *_ = np.linalg.lstsq(A, y, rcond=None)
    cands.append(sol)
    for d in (dlo, dhi):
        if np.isfinite(d):
            cands.append((d, max(float(x @ (y - d) / (x @ x)), 0.0)))
    cands.append((min(max(float(np.mean(y)), dlo), dhi), 0.0))
    best = None
    for d, b in cands:
        if not (dlo <= d <= dhi and b >= 0):
            continue
        val = float(np.mean((d + b * x - y) ** 2))
        if best is None or val < best[0]:
            best = (val, d, b)
    return best


def start_points(n, y, increasing: bool) -> list[tuple[float, float, float]]:
    """Sixteen starts: four asymptote guesses times four decay rates.

    The scale is the exact least-squares solve for the given asymptote and
    decay rate, clipped at zero.
    """
    sign = -1.0 if increasing else 1.0
    if increasing:
        top = float(np.clip(np.max(y), 0.5, 1.0))
        deltas = (top, 0.75, 1.0, 0.5 * (top + 1.0))
    else:
        low = max(float(np.min(y)), 0.0)
        deltas = (low, 2.0 * low, 0.5 * low, 0.0)
    starts = []
    for delta, gamma in itertools.product(deltas, GAMMA_STARTS):
        x = sign * n ** (-gamma)
        beta = max(float(x @ (y - delta) / (x @ x)), 0.0)
        starts.append((delta, beta, gamma))
    return starts


def fit_power_law(trajectory, direction=None) -> PowerLawFit:
    """Least-squares power-law fit under the box constraints of its direction.

    Each start runs a bound-projected Nelder-Mead search; the winner is then
    polished by minimizing the exact profile objective over the decay rate.
    A fit that is indistinguishable from a constant is returned flat with
    ``degenerate=True`` and the winning start's decay rate.
    """
    n, y, increasing = as_points(trajectory, direction)
    if len(np.unique(n)) < 3:
        raise InsufficientPoints("a power-law fit needs at least three distinct sizes")
    sign = -1.0 if increasing else 1.0
    bounds = _bounds(increasing)
    dlo, dhi = bounds[0]

    best_val, best_x, best_start = np.inf, None, 0
    starts = start_points(n, y, increasing)
    for i, x0 in enumerate(starts):
        res = optimize.minimize(_objective, np.array(x0), args=(n, y, sign),
                                method="Nelder-Mead", bounds=bounds,
                                options={"xatol": XATOL, "fatol": 1e-13, "maxiter": MAX_ITER,
                                         "maxfev": 4 * MAX_ITER})
        x = np.clip(res.x, [b[0] for b in bounds], [b[1] for b in bounds])
        val = _objective(x, n, y, sign)
        start_val = _objective(x0, n, y, sign)
        if start_val < val:
            val, x = start_val, np.array(x0)
        if val < best_val:
            best_val, best_x, best_start = val, x, i

    gamma0 = float(best_x[2])
    hi = max(4.0 * gamma0, 10.0)
    polish = optimize.minimize_scalar(lambda g: _profile(g, n, y, sign, dlo, dhi)[0],
                                      bounds=(0.0, hi), method="bounded",
                                      options={"xatol": 1e-12, "maxiter": 500})
    for g in (polish.x, gamma0):
        val, d, b = _profile(float(g), n, y, sign, dlo, dhi)
        if val < best_val:
            best_val, best_x = val, np.array([d, b, float(g)])

    delta, beta, gamma = (float(v) for v in best_x)
    flat = float(np.clip(np.mean(y), dlo, dhi))
    flat_val = float(np.mean((flat - y) ** 2))
    degenerate = flat_val <= best_val + 1e-14 * max(1.0, float(np.mean(y * y)))
    if degenerate:
        delta, beta, gamma = flat, 0.0, float(starts[best_start][2])
        best_val = flat_val
    return PowerLawFit(delta=delta, beta=beta, gamma=gamma,
                       direction="increasing" if increasing else "decreasing",
                       residual_sse=float(best_val * len(n)), degenerate=degenerate)
