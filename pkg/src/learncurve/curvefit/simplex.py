"""Dense two-phase tableau simplex for small linear programs.

Solves ``min c'x  s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  x >= 0`` with
Bland's entering rule and a Harris ratio test for numerical stability.  Meant for the few-dozen-variable programs
of the spline fitter, not for anything large or sparse.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

COST_TOL = 1e-9
PIVOT_TOL = 1e-9
FEAS_TOL = 1e-9


class Infeasible(ArithmeticError):
    pass


class Unbounded(ArithmeticError):
    pass


@dataclass
class SimplexResult:
    x: np.ndarray
    fun: float
    slack: np.ndarray
    iterations: int


def _pivot(T, basis, row, col):
    T[row] /= T[row, col]
    for i in range(T.shape[0]):
        if i != row and T[i, col] != 0.0:
            T[i] -= T[i, col] * T[row]
    basis[row] = col


def _run(T, basis, n_cols, max_iter):
    """Optimize the tableau whose last row holds reduced costs over ``n_cols`` columns."""
    it = 0
    while it < max_iter:
        cost = T[-1, :n_cols]
        entering = np.flatnonzero(cost < -COST_TOL)
        if entering.size == 0:
            return it
        col = int(entering[0])
        column = T[:-1, col]
        candidates = np.flatnonzero(column > PIVOT_TOL)
        if candidates.size == 0:
            raise Unbounded("objective is unbounded below")
        # Harris two-pass ratio test: bound the step with a relaxed right-hand
        # side, then take the largest pivot among the rows within that bound
        rhs = np.maximum(T[candidates, -1], 0.0)
        limit = ((rhs + FEAS_TOL) / column[candidates]).min()
        within = candidates[rhs / column[candidates] <= limit]
        pivots = column[within]
        best = within[pivots >= pivots.max() * (1 - 1e-12)]
        row = int(best[np.argmin(basis[best])])
        _pivot(T, basis, row, col)
        np.maximum(T[:-1, -1], 0.0, out=T[:-1, -1])
        it += 1
    raise ArithmeticError(f"simplex did not finish within {max_iter} pivots")


def simplex(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, max_iter=10_000) -> SimplexResult:
    c = np.asarray(c, dtype=float)
    n = c.size
    A_ub = np.zeros((0, n)) if A_ub is None else np.atleast_2d(np.asarray(A_ub, dtype=float))
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float).ravel()
    A_eq = np.zeros((0, n)) if A_eq is None else np.atleast_2d(np.asarray(A_eq, dtype=float))
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).ravel()
    m_ub, m_eq = len(b_ub), len(b_eq)
    m = m_ub + m_eq

    # columns: x | slacks (one per inequality) | artificials | rhs
    n_slack = m_ub
    A = np.zeros((m, n + n_slack))
    b = np.concatenate([b_ub, b_eq])
    A[:m_ub, :n] = A_ub
    A[:m_ub, n:] = np.eye(m_ub)
    A[m_ub:, :n] = A_eq
    # equilibrate rows so tolerances mean the same thing in every constraint
    scale = np.abs(A).max(axis=1)
    scale[scale == 0] = 1.0
    A /= scale[:, None]
    b = b / scale
    flip = b < 0
    A[flip] *= -1
    b = np.where(flip, -b, b)

    basis = np.full(m, -1, dtype=int)
    need_art = []
    for i in range(m):
        if i < m_ub and not flip[i]:
            basis[i] = n + i
        else:
            need_art.append(i)
    n_art = len(need_art)
    width = n + n_slack + n_art
    T = np.zeros((m + 1, width + 1))
    T[:m, :n + n_slack] = A
    T[:m, -1] = b
    for k, i in enumerate(need_art):
        T[i, n + n_slack + k] = 1.0
        basis[i] = n + n_slack + k

    iterations = 0
    if n_art:
        T[-1, n + n_slack:width] = 1.0
        for i in need_art:
            T[-1] -= T[i]
        iterations += _run(T, basis, width, max_iter)
        if T[-1, -1] < -FEAS_TOL * max(1.0, np.abs(b).max(initial=0.0)):
            raise Infeasible("linear program has no feasible point")
        # drive artificials out of the basis, dropping redundant rows
        keep = np.ones(m + 1, dtype=bool)
        for i in range(m):
            if basis[i] >= n + n_slack:
                row = T[i, :n + n_slack]
                col = int(np.argmax(np.abs(row)))
                if abs(row[col]) > PIVOT_TOL:
                    _pivot(T, basis, i, col)
                else:
                    keep[i] = False
        T = np.delete(T[keep], np.s_[n + n_slack:width], axis=1)
        basis = basis[keep[:-1]]
    width = n + n_slack
    T[-1] = 0.0
    T[-1, :n] = c
    for i, j in enumerate(basis):
        if T[-1, j] != 0.0:
            T[-1] -= T[-1, j] * T[i]
    iterations += _run(T, basis, width, max_iter)

    sol = np.zeros(width)
    sol[basis] = T[:-1, -1]
    x = sol[:n]
    slack = b_ub - A_ub @ x if m_ub else np.zeros(0)
    return SimplexResult(x=x, fun=float(c @ x), slack=slack, iterations=iterations)
