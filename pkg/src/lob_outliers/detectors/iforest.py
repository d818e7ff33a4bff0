"""Isolation forest with uniform feature and split-value draws."""

from __future__ import annotations

import math

import numpy as np

from ._base import Fit, ParameterError, detector

EULER_GAMMA = 0.5772156649015329


def average_path_length(m) -> np.ndarray:
    """Expected unsuccessful-search path length in a binary tree of ``m`` points."""
    m = np.asarray(m, dtype=float)
    out = np.zeros_like(m)
    two = m == 2
    big = m > 2
    out[two] = 1.0
    mb = m[big]
    out[big] = 2.0 * (np.log(mb - 1.0) + EULER_GAMMA) - 2.0 * (mb - 1.0) / mb
    return out


class IsolationTree:
    """Array-backed tree. Leaves have ``feature == -1``."""

    def __init__(self, X: np.ndarray, rng: np.random.Generator, height_limit: int):
        feature, threshold, left, right, size, depth = [], [], [], [], [], []

        def new_node(d):
            for lst, v in ((feature, -1), (threshold, 0.0), (left, -1), (right, -1),
                           (size, 0), (depth, d)):
                lst.append(v)
            return len(feature) - 1

        stack = [(new_node(0), np.arange(X.shape[0]))]
        while stack:
            node, rows = stack.pop()
            size[node] = rows.size
            d = depth[node]
            if rows.size <= 1 or d >= height_limit:
                continue
            sub = X[rows]
            lo, hi = sub.min(axis=0), sub.max(axis=0)
            splittable = np.flatnonzero(hi > lo)
            if splittable.size == 0:
                continue
            q = int(splittable[rng.integers(splittable.size)])
            t = rng.uniform(lo[q], hi[q])
            go_left = sub[:, q] < t
            feature[node], threshold[node] = q, t
            left[node] = new_node(d + 1)
            right[node] = new_node(d + 1)
            stack.append((right[node], rows[~go_left]))
            stack.append((left[node], rows[go_left]))

        self.feature = np.array(feature, dtype=np.int64)
        self.threshold = np.array(threshold)
        self.left = np.array(left, dtype=np.int64)
        self.right = np.array(right, dtype=np.int64)
        self.leaf_adjust = np.array(depth, dtype=float) + average_path_length(size)

    def path_length(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = np.flatnonzero(self.feature[node] >= 0)
        while active.size:
            nd = node[active]
            f = self.feature[nd]
            go_left = X[active, f] < self.threshold[nd]
            node[active] = np.where(go_left, self.left[nd], self.right[nd])
            active = active[self.feature[node[active]] >= 0]
        return self.leaf_adjust[node]


@detector("ISOF")
def score_isolation_forest(X, params, seed) -> Fit:
    """``2 ** (-E[path length] / c(psi))`` over ``n_trees`` trees on ``psi``-row subsamples."""
    n = X.shape[0]
    n_trees, psi = params["n_trees"], params["subsample"]
    if n_trees < 1 or not 2 <= psi <= n:
        raise ParameterError(f"need n_trees >= 1 and 2 <= subsample <= {n}")
    rng = np.random.default_rng(seed)
    limit = math.ceil(math.log2(psi))
    total = np.zeros(n)
    for _ in range(n_trees):
        rows = rng.choice(n, psi, replace=False)
        tree = IsolationTree(X[rows], rng, limit)
        total += tree.path_length(X)
    mean_path = total / n_trees
    score = 2.0 ** (-mean_path / average_path_length(psi))
    return Fit(score, score > params["label_threshold"], {"psi": psi, "height_limit": limit},
               {"mean_path_length": mean_path})
