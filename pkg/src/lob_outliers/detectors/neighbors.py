"""Exact Euclidean neighbor search in row blocks.

Distances come from ``scipy.spatial.distance.cdist``, which evaluates
differences directly, so coincident rows are exactly 0 apart. Memory stays
bounded by processing ``block x n`` distance tiles.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial.distance import cdist

TILE_ELEMENTS = 4_000_000


def block_size(n_cols: int) -> int:
    return max(1, TILE_ELEMENTS // max(n_cols, 1))


def distance_blocks(X: np.ndarray, Y: np.ndarray | None = None):
    """Yield ``(start, stop, D)`` with ``D = dist(X[start:stop], Y)``."""
    Y = X if Y is None else Y
    step = block_size(Y.shape[0])
    for start in range(0, X.shape[0], step):
        stop = min(start + step, X.shape[0])
        yield start, stop, cdist(X[start:stop], Y)


def _select_k(D: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """k smallest entries per row, ordered by (distance, column index)."""
    m = D.shape[0]
    part = np.argpartition(D, k - 1, axis=1)[:, :k]
    dsel = np.take_along_axis(D, part, axis=1)
    kth = dsel.max(axis=1)
    ties = (D <= kth[:, None]).sum(axis=1) > k
    order = np.lexsort((part, dsel), axis=-1)
    idx = np.take_along_axis(part, order, axis=1)
    dist = np.take_along_axis(dsel, order, axis=1)
    for r in np.flatnonzero(ties):
        full = np.lexsort((np.arange(D.shape[1]), D[r]))[:k]
        idx[r] = full
        dist[r] = D[r, full]
    return dist, idx


def kneighbors(X: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Distances and indices of the ``k`` nearest *other* rows of every row.

    Ties are broken by row index.
    """
    n = X.shape[0]
    if not 1 <= k < n:
        raise ValueError(f"k={k} must lie in [1, {n - 1}]")
    dist = np.empty((n, k))
    idx = np.empty((n, k), dtype=np.int64)
    for start, stop, D in distance_blocks(X):
        rows = np.arange(stop - start)
        D[rows, rows + start] = np.inf
        dist[start:stop], idx[start:stop] = _select_k(D, k)
    return dist, idx


def nearest_in(X: np.ndarray, Y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Distance from each row of ``X`` to its nearest row of ``Y`` (first index on ties)."""
    dist = np.empty(X.shape[0])
    idx = np.empty(X.shape[0], dtype=np.int64)
    for start, stop, D in distance_blocks(X, Y):
        j = D.argmin(axis=1)
        idx[start:stop] = j
        dist[start:stop] = D[np.arange(stop - start), j]
    return dist, idx
