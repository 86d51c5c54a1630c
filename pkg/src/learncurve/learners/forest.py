"""Bagged regression trees (CART with variance-reduction splits).

Binary responses are fitted as 0/1 regression, which gives the same splits as
the Gini criterion, and leaf means are class-1 frequencies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from ..errors import InvalidInput


@njit(cache=True)
def _grow_tree(X, y, sample, mtry, min_leaf, seed, feature, threshold, left, right, value):
    """Grow one tree on the rows ``sample``; returns the node count.

    Node arrays must hold at least ``2 * len(sample)`` entries.
    """
    np.random.seed(seed)
    n_feat = X.shape[1]
    idx = sample.copy()
    m_total = idx.shape[0]
    feats = np.arange(n_feat)
    # stack of (node, start, end)
    stack = np.empty((2 * m_total + 1, 3), dtype=np.int64)
    top = 0
    stack[0, 0] = 0
    stack[0, 1] = 0
    stack[0, 2] = m_total
    top = 1
    n_nodes = 1
    vals = np.empty(m_total)
    ys = np.empty(m_total)
    while top > 0:
        top -= 1
        node = stack[top, 0]
        start = stack[top, 1]
        end = stack[top, 2]
        m = end - start
        total = 0.0
        for i in range(start, end):
            total += y[idx[i]]
        value[node] = total / m
        feature[node] = -1
        if m < 2 * min_leaf:
            continue
        pure = True
        y0 = y[idx[start]]
        for i in range(start + 1, end):
            if y[idx[i]] != y0:
                pure = False
                break
        if pure:
            continue
        best_gain = 1e-12
        best_f = -1
        best_thr = 0.0
        base = total * total / m
        # partial Fisher-Yates draw of mtry candidate features
        for k in range(mtry):
            r = k + np.random.randint(n_feat - k)
            tmp = feats[k]
            feats[k] = feats[r]
            feats[r] = tmp
            f = feats[k]
            for i in range(m):
                vals[i] = X[idx[start + i], f]
            order = np.argsort(vals[:m], kind="mergesort")
            for i in range(m):
                ys[i] = y[idx[start + order[i]]]
            sl = 0.0
            for i in range(1, m - min_leaf + 1):
                sl += ys[i - 1]
                if i < min_leaf:
                    continue
                lo = vals[order[i - 1]]
                hi = vals[order[i]]
                if lo >= hi:
                    continue
                sr = total - sl
                gain = sl * sl / i + sr * sr / (m - i) - base
                if gain > best_gain:
                    best_gain = gain
                    best_f = f
                    best_thr = 0.5 * (lo + hi)
                    if best_thr >= hi:
                        best_thr = lo
        if best_f < 0:
            continue
        # partition idx[start:end] around the threshold
        i = start
        j = end - 1
        while i <= j:
            if X[idx[i], best_f] <= best_thr:
                i += 1
            else:
                tmp = idx[i]
                idx[i] = idx[j]
                idx[j] = tmp
                j -= 1
        feature[node] = best_f
        threshold[node] = best_thr
        lnode = n_nodes
        rnode = n_nodes + 1
        n_nodes += 2
        left[node] = lnode
        right[node] = rnode
        stack[top, 0] = rnode
        stack[top, 1] = i
        stack[top, 2] = end
        top += 1
        stack[top, 0] = lnode
        stack[top, 1] = start
        stack[top, 2] = i
        top += 1
    return n_nodes


@njit(cache=True)
def _predict_trees(X, feature, threshold, left, right, value):
    n_trees = feature.shape[0]
    out = np.empty((n_trees, X.shape[0]))
    for t in range(n_trees):
        for i in range(X.shape[0]):
            node = 0
            while feature[t, node] >= 0:
                if X[i, feature[t, node]] <= threshold[t, node]:
                    node = left[t, node]
                else:
                    node = right[t, node]
            out[t, i] = value[t, node]
    return out


@dataclass
class ForestModel:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_features: int
    n_train: int

    @property
    def n_trees(self) -> int:
        return self.feature.shape[0]

    def tree_predictions(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise InvalidInput(
                f"feature width {X.shape[-1]} does not match training width {self.n_features}")
        return _predict_trees(np.ascontiguousarray(X), self.feature, self.threshold,
                              self.left, self.right, self.value)

    def predict(self, X) -> np.ndarray:
        return self.tree_predictions(X).mean(axis=0)


def resolve_mtry(mtry, p: int) -> int:
    if mtry in (None, "sqrt_p"):
        return max(1, math.ceil(math.sqrt(p)))
    mtry = int(mtry)
    if not 1 <= mtry <= p:
        raise InvalidInput(f"mtry={mtry} outside [1, {p}]")
    return mtry


def fit_forest(X, y, trees=250, mtry="sqrt_p", min_leaf=5, bootstrap=True,
               rng=None) -> ForestModel:
    """Fit ``trees`` depth-unlimited CART trees.

    Tree ``t`` draws its bootstrap rows and split candidates from a stream
    keyed by ``t``, so the ensemble does not depend on fitting order.
    """
    X = np.ascontiguousarray(X, dtype=float)
    y = np.ascontiguousarray(y, dtype=float)
    n, p = X.shape
    if trees < 1 or min_leaf < 1:
        raise InvalidInput("need trees >= 1 and min_leaf >= 1")
    k = resolve_mtry(mtry, p)
    rng = np.random.default_rng(rng)
    base = int(rng.integers(2**63 - 1))
    size = 2 * n + 1
    feature = np.full((trees, size), -1, dtype=np.int64)
    threshold = np.zeros((trees, size))
    left = np.zeros((trees, size), dtype=np.int64)
    right = np.zeros((trees, size), dtype=np.int64)
    value = np.zeros((trees, size))
    used = 1
    for t in range(trees):
        tree_rng = np.random.default_rng(np.random.SeedSequence(base, spawn_key=(t,)))
        sample = tree_rng.integers(0, n, n) if bootstrap else np.arange(n)
        seed = int(tree_rng.integers(2**31 - 1))
        count = _grow_tree(X, y, sample.astype(np.int64), k, int(min_leaf), seed,
                           feature[t], threshold[t], left[t], right[t], value[t])
        used = max(used, count)
    return ForestModel(feature[:, :used].copy(), threshold[:, :used].copy(),
                       left[:, :used].copy(), right[:, :used].copy(), value[:, :used].copy(),
                       n_features=p, n_train=n)
