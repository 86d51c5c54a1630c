"""Ridge and lasso fits (linear or logistic) on internally standardized features."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import CLASSIFICATION
from ..errors import InvalidInput, LearnerNonConvergence
from . import _cd

# stop a regularization path once the fit explains this share of the null deviance
PATH_DEVIANCE_LIMIT = 0.999


@dataclass
class LinearModel:
    coef: np.ndarray
    intercept: float
    family: str
    task: str
    penalty: float
    n_train: int
    sweeps: int = 0

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.coef.shape[0]:
            raise InvalidInput(
                f"feature width {X.shape[-1]} does not match training width {self.coef.shape[0]}")
        return X @ self.coef + self.intercept


def _row_space(Xs):
    """Orthonormal basis ``V`` of the row space and the rotated design ``(Xs V)'``.

    Wide designs go through the eigendecomposition of the small Gram matrix
    ``Xs Xs'``, which is several times cheaper than a full SVD.
    """
    n, p = Xs.shape
    if n < p:
        evals, U = np.linalg.eigh(Xs @ Xs.T)
        S = np.sqrt(np.maximum(evals, 0.0))
        keep = S > S.max() * 1e-7 if S.size and S.max() > 0 else np.zeros(S.shape, bool)
        V = (Xs.T @ U[:, keep]) / S[keep]
        ZT = (U[:, keep] * S[keep]).T
    else:
        U, S, Vt = np.linalg.svd(Xs, full_matrices=False)
        keep = S > S[0] * 1e-10 if S.size and S[0] > 0 else np.zeros(S.shape, bool)
        V = Vt[keep].T
        ZT = (U[:, keep] * S[keep]).T
    return V, np.ascontiguousarray(ZT)


class _Design:
    """Standardized design, rotated onto its row space for ridge.

    Ridge solutions lie in the row space of the design, so with
    ``Xs = U S V'`` the ridge problem in ``Xs`` is the same problem in the
    orthogonal columns ``U S`` with ``beta = V gamma``.
    """

    def __init__(self, X, family):
        X = np.asarray(X, dtype=float)
        self.n, self.p = X.shape
        self.mean = X.mean(axis=0)
        sd = X.std(axis=0)
        self.constant = sd <= 1e-12 * np.maximum(1.0, np.abs(self.mean))
        self.sd = np.where(self.constant, 1.0, sd)
        Xs = (X - self.mean) / self.sd
        Xs[:, self.constant] = 0.0
        self.Xs = Xs
        self.rotation = None
        if family == "ridge":
            self.rotation, self.ZT = _row_space(Xs)
        else:
            self.ZT = np.ascontiguousarray(Xs.T)

    def lambda_max(self, y) -> float:
        g = np.abs(self.Xs.T @ (y - y.mean())) / self.n
        return float(g.max()) if g.size else 0.0

    def to_original(self, beta, b0):
        coef_s = self.rotation @ beta if self.rotation is not None else beta
        coef = coef_s / self.sd
        coef[self.constant] = 0.0
        return coef, float(b0 - coef @ self.mean)


def lambda_grid(X, y, family: str, grid_size: int = 50) -> np.ndarray:
    """Decreasing log-spaced penalties from the all-zero lasso penalty downward.

    The grid spans four decades, or two when there are fewer rows than
    columns, where small penalties interpolate and converge slowly.
    Ridge reuses the lasso grid scaled up by 10^3.
    """
    d = _Design(X, "lasso")
    lmax = d.lambda_max(np.asarray(y, dtype=float))
    if lmax <= 0:
        lmax = 1.0
    n, p = np.shape(X)
    grid = lmax * np.geomspace(1.0, 1e-2 if n < p else 1e-4, grid_size)
    return grid * 1e3 if family == "ridge" else grid


def _null_intercept(y, logistic):
    ybar = float(np.mean(y))
    if logistic:
        ybar = min(max(ybar, 1e-12), 1 - 1e-12)
        return math.log(ybar / (1 - ybar))
    return ybar


def _deviance(ZT, y, beta, b0, logistic):
    return float(_cd.deviance(ZT, y, beta, b0, logistic))


def fit_path(X, y, family: str, task: str, lambdas, tol=1e-7, max_sweeps=10_000,
             early_stop=True, partial=False):
    """Warm-started fits along a decreasing penalty sequence.

    Returns ``(coefs, intercepts, sweeps)`` with coefficients on the original
    feature scale, one row per penalty.  Once the fit explains
    ``PATH_DEVIANCE_LIMIT`` of the null deviance the remaining penalties
    reuse the last solution.  Infinite penalties give the null model.
    With ``partial`` a penalty that fails to converge truncates the path:
    its row and all later rows are NaN instead of raising.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    lambdas = np.asarray(lambdas, dtype=float)
    if np.any(np.isnan(lambdas)) or np.any(lambdas < 0):
        raise InvalidInput("penalties must be nonnegative numbers")
    logistic = task == CLASSIFICATION
    d = _Design(X, family)
    m = d.ZT.shape[0]
    b0 = _null_intercept(y, logistic)
    null_dev = _deviance(d.ZT, y, np.zeros(m), b0, logistic)
    finite = np.isfinite(lambdas)
    n_inf = int(np.sum(~finite))
    if np.any(~finite[n_inf:]):
        raise InvalidInput("infinite penalties must lead a decreasing sequence")
    betas = np.zeros((len(lambdas), m))
    b0s = np.full(len(lambdas), b0)
    sweeps = np.zeros(len(lambdas), dtype=int)
    limit = PATH_DEVIANCE_LIMIT if early_stop else 2.0
    b, b0_fit, used, failed = _cd.path(d.ZT, y, np.ascontiguousarray(lambdas[n_inf:]),
                                       family == "lasso", logistic, b0, tol, max_sweeps,
                                       null_dev, limit)
    if failed >= 0 and partial:
        b[failed:] = np.nan
        b0_fit[failed:] = np.nan
    elif failed >= 0:
        raise LearnerNonConvergence(
            f"{family} did not converge within {max_sweeps} sweeps at penalty "
            f"{lambdas[n_inf + failed]:.4g}")
    betas[n_inf:], b0s[n_inf:], sweeps[n_inf:] = b, b0_fit, used
    coef_s = betas @ d.rotation.T if d.rotation is not None else betas
    coefs = coef_s / d.sd
    coefs[:, d.constant] = 0.0
    return coefs, b0s - coefs @ d.mean, sweeps


def fit_linear(X, y, family: str, task: str, penalty: float, tol=1e-7,
               max_sweeps=10_000) -> LinearModel:
    if penalty < 0:
        raise InvalidInput("penalty must be nonnegative")
    coefs, intercepts, sweeps = fit_path(X, y, family, task, [penalty], tol, max_sweeps,
                                         early_stop=False)
    return LinearModel(coef=coefs[0], intercept=float(intercepts[0]), family=family,
                       task=task, penalty=float(penalty), n_train=len(y),
                       sweeps=int(sweeps[0]))
