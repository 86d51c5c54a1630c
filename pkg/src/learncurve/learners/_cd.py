"""Cyclic coordinate descent kernels for penalized linear and logistic models.

All kernels work on standardized features passed transposed (``ZT`` is
p x n, C-contiguous) so that a column access is a contiguous row.

Objectives, with ``pen = |b|_1`` (lasso) or ``|b|^2 / 2`` (ridge)::

    gaussian:  1/(2n) sum (y - b0 - z b)^2        + lam * pen
    logistic:  1/n sum log(1 + e^eta) - y * eta   + lam * pen
"""

import numpy as np
from numba import njit

_W_FLOOR = 1e-5
_MAX_HALVINGS = 30


@njit(cache=True, fastmath=True)
def _penalty(beta, lam, l1):
    if lam == 0.0:
        return 0.0
    s = 0.0
    if l1:
        for j in range(beta.shape[0]):
            s += abs(beta[j])
    else:
        for j in range(beta.shape[0]):
            s += 0.5 * beta[j] * beta[j]
    return lam * s


@njit(cache=True, fastmath=True)
def _weighted_ls_objective(r, w, beta, lam, l1):
    n = r.shape[0]
    s = 0.0
    for i in range(n):
        s += w[i] * r[i] * r[i]
    return 0.5 * s / n + _penalty(beta, lam, l1)


@njit(cache=True, fastmath=True)
def _converged(old, new, tol):
    return abs(old - new) <= tol * max(abs(new), 1e-12)


@njit(cache=True, fastmath=True)
def _sweep(ZT, w, c, lam, l1, beta, r, active_only):
    n = r.shape[0]
    for j in range(ZT.shape[0]):
        if active_only and beta[j] == 0.0:
            continue
        if c[j] <= 0.0:
            continue
        zj = ZT[j]
        g = 0.0
        for i in range(n):
            g += w[i] * zj[i] * r[i]
        g = g / n + c[j] * beta[j]
        if l1:
            if g > lam:
                new = (g - lam) / c[j]
            elif g < -lam:
                new = (g + lam) / c[j]
            else:
                new = 0.0
        else:
            new = g / (c[j] + lam)
        delta = new - beta[j]
        if delta != 0.0:
            for i in range(n):
                r[i] -= zj[i] * delta
            beta[j] = new


@njit(cache=True, fastmath=True)
def _center_intercept(w, r, b0):
    sw = 0.0
    sr = 0.0
    for i in range(r.shape[0]):
        sw += w[i]
        sr += w[i] * r[i]
    shift = sr / sw
    for i in range(r.shape[0]):
        r[i] -= shift
    return b0 + shift


@njit(cache=True, fastmath=True)
def weighted_cd(ZT, y, w, lam, l1, beta, b0, tol, max_sweeps):
    """Solve the weighted least-squares problem in place; returns (b0, sweeps, ok)."""
    m, n = ZT.shape
    c = np.zeros(m)
    for j in range(m):
        s = 0.0
        for i in range(n):
            s += w[i] * ZT[j, i] * ZT[j, i]
        c[j] = s / n
    r = y - b0
    for j in range(m):
        if beta[j] != 0.0:
            r -= ZT[j] * beta[j]
    b0 = _center_intercept(w, r, b0)
    obj = _weighted_ls_objective(r, w, beta, lam, l1)
    sweeps = 0
    while sweeps < max_sweeps:
        _sweep(ZT, w, c, lam, l1, beta, r, False)
        b0 = _center_intercept(w, r, b0)
        sweeps += 1
        new = _weighted_ls_objective(r, w, beta, lam, l1)
        if _converged(obj, new, tol):
            return b0, sweeps, True
        obj = new
        while sweeps < max_sweeps:
            _sweep(ZT, w, c, lam, l1, beta, r, True)
            b0 = _center_intercept(w, r, b0)
            sweeps += 1
            new = _weighted_ls_objective(r, w, beta, lam, l1)
            done = _converged(obj, new, tol)
            obj = new
            if done:
                break
    return b0, sweeps, False


@njit(cache=True, fastmath=True)
def _linear_predictor(ZT, beta, b0):
    m, n = ZT.shape
    eta = np.full(n, b0)
    for j in range(m):
        if beta[j] != 0.0:
            eta += ZT[j] * beta[j]
    return eta


@njit(cache=True, fastmath=True)
def logistic_objective(ZT, y, beta, b0, lam, l1):
    eta = _linear_predictor(ZT, beta, b0)
    n = y.shape[0]
    s = 0.0
    for i in range(n):
        e = eta[i]
        if e > 0:
            s += e + np.log1p(np.exp(-e)) - y[i] * e
        else:
            s += np.log1p(np.exp(e)) - y[i] * e
    return s / n + _penalty(beta, lam, l1)


@njit(cache=True, fastmath=True)
def logistic_cd(ZT, y, lam, l1, beta, b0, tol, max_sweeps):
    """Penalized logistic regression by IRLS with coordinate-descent inner solves.

    The outer step is halved while it fails to decrease the penalized
    objective, so the objective sequence is monotone.  Returns
    ``(b0, sweeps, ok)``; ``beta`` is updated in place.
    """
    n = y.shape[0]
    obj = logistic_objective(ZT, y, beta, b0, lam, l1)
    total = 0
    while total < max_sweeps:
        eta = _linear_predictor(ZT, beta, b0)
        w = np.empty(n)
        z = np.empty(n)
        for i in range(n):
            p = 1.0 / (1.0 + np.exp(-eta[i]))
            wi = max(p * (1.0 - p), _W_FLOOR)
            w[i] = wi
            z[i] = eta[i] + (y[i] - p) / wi
        new_beta = beta.copy()
        new_b0, sweeps, _ = weighted_cd(ZT, z, w, lam, l1, new_beta, b0,
                                        tol, max_sweeps - total)
        total += sweeps
        new_obj = logistic_objective(ZT, y, new_beta, new_b0, lam, l1)
        halvings = 0
        while new_obj > obj and halvings < _MAX_HALVINGS:
            new_beta = 0.5 * (new_beta + beta)
            new_b0 = 0.5 * (new_b0 + b0)
            new_obj = logistic_objective(ZT, y, new_beta, new_b0, lam, l1)
            halvings += 1
        if new_obj > obj:
            return b0, total, True
        beta[:] = new_beta
        b0 = new_b0
        done = _converged(obj, new_obj, tol)
        obj = new_obj
        if done:
            return b0, total, True
    return b0, total, False


@njit(cache=True, fastmath=True)
def deviance(ZT, y, beta, b0, logistic):
    eta = _linear_predictor(ZT, beta, b0)
    s = 0.0
    for i in range(y.shape[0]):
        e = eta[i]
        if logistic:
            if e > 0:
                s += e + np.log1p(np.exp(-e)) - y[i] * e
            else:
                s += np.log1p(np.exp(e)) - y[i] * e
        else:
            s += (y[i] - e) * (y[i] - e)
    return 2.0 * s if logistic else s


@njit(cache=True, fastmath=True)
def path(ZT, y, lambdas, l1, logistic, b0, tol, max_sweeps, null_dev, dev_limit):
    """Warm-started solutions along decreasing penalties.

    Once the fit explains ``dev_limit`` of ``null_dev`` the remaining rows
    repeat the last solution (``dev_limit > 1`` disables this).  Returns
    ``(betas, b0s, sweeps, failed)`` with ``failed`` the first penalty index
    that did not converge, or -1.
    """
    m = ZT.shape[0]
    L = lambdas.shape[0]
    betas = np.zeros((L, m))
    b0s = np.zeros(L)
    sweeps = np.zeros(L, dtype=np.int64)
    beta = np.zeros(m)
    w = np.ones(y.shape[0])
    stopped = -1
    for k in range(L):
        if stopped >= 0:
            betas[k] = betas[stopped]
            b0s[k] = b0s[stopped]
            continue
        if logistic:
            b0, used, ok = logistic_cd(ZT, y, lambdas[k], l1, beta, b0, tol, max_sweeps)
        else:
            b0, used, ok = weighted_cd(ZT, y, w, lambdas[k], l1, beta, b0, tol, max_sweeps)
        if not ok:
            return betas, b0s, sweeps, k
        sweeps[k] = used
        betas[k] = beta
        b0s[k] = b0
        if null_dev > 0 and 1.0 - deviance(ZT, y, beta, b0, logistic) / null_dev > dev_limit:
            stopped = k
    return betas, b0s, sweeps, -1
