"""Distance and density detectors: k-th neighbor distance, LOF, DBSCAN, OPTICS."""

from __future__ import annotations

import numpy as np
from scipy.spatial.distance import cdist

from ._base import Fit, check_count, detector, quantile_labels
from .neighbors import distance_blocks, kneighbors, nearest_in

LRD_EPS = 1e-10


@detector("KNN")
def score_knn(X, params, seed) -> Fit:
    """Distance to the k-th nearest other row."""
    k = params["k"]
    check_count("k", k, X.shape[0])
    dist, _ = kneighbors(X, k)
    score = dist[:, -1]
    return Fit(score, quantile_labels(score, params["contamination"]), {}, {})


def local_outlier_factor(X: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """LOF values and local reachability densities for neighbor count ``k``."""
    dist, idx = kneighbors(X, k)
    kdist = dist[:, -1]
    reach = np.maximum(dist, kdist[idx])
    lrd = 1.0 / (reach.mean(axis=1) + LRD_EPS)
    return lrd[idx].mean(axis=1) / lrd, lrd


@detector("LOF")
def score_lof(X, params, seed) -> Fit:
    k = params["k"]
    check_count("k", k, X.shape[0])
    lof, lrd = local_outlier_factor(X, k)
    return Fit(lof, lof > params["label_threshold"], {}, {"lrd": lrd})


# ---------------------------------------------------------------------------
# DBSCAN
# ---------------------------------------------------------------------------

def _core_components(X: np.ndarray, core: np.ndarray, eps: float) -> np.ndarray:
    """Cluster id per core row: connected components of the eps-graph on cores.

    Breadth-first expansion in frontier batches; each core row is expanded once.
    """
    cores = np.flatnonzero(core)
    comp = np.full(X.shape[0], -1, dtype=np.int64)
    unvisited = np.ones(cores.size, dtype=bool)
    cluster = 0
    for start in range(cores.size):
        if not unvisited[start]:
            continue
        unvisited[start] = False
        comp[cores[start]] = cluster
        frontier = cores[[start]]
        while frontier.size:
            pool = np.flatnonzero(unvisited)
            if pool.size == 0:
                break
            hit = np.zeros(pool.size, dtype=bool)
            for a, b, D in distance_blocks(X[frontier], X[cores[pool]]):
                hit |= (D <= eps).any(axis=0)
            new = pool[hit]
            unvisited[new] = False
            frontier = cores[new]
            comp[frontier] = cluster
        cluster += 1
    return comp


def dbscan(X: np.ndarray, eps: float, min_pts: int):
    """Core/border/noise labelling.

    Returns ``(labels, core, nearest_core_dist)`` where ``labels`` is the
    cluster id (``-1`` for noise). A border row joins the cluster of its
    nearest core row.
    """
    n = X.shape[0]
    counts = np.empty(n, dtype=np.int64)
    for start, stop, D in distance_blocks(X):
        counts[start:stop] = (D <= eps).sum(axis=1)
    core = counts >= min_pts
    labels = _core_components(X, core, eps)
    near = np.zeros(n)
    if core.any():
        rest = np.flatnonzero(~core)
        if rest.size:
            cores = np.flatnonzero(core)
            d, j = nearest_in(X[rest], X[cores])
            near[rest] = d
            border = d <= eps
            labels[rest[border]] = labels[cores[j[border]]]
    else:
        near[:] = np.inf
    return labels, core, near


@detector("DBSCAN")
def score_dbscan(X, params, seed) -> Fit:
    """Noise rows are outliers; the score is the distance to the nearest core row.

    ``eps`` defaults to the ``eps_percentile`` of the distance to the
    ``min_pts``-th nearest row (the row itself counted first).
    """
    n = X.shape[0]
    min_pts = params["min_pts"]
    check_count("min_pts", min_pts, n)
    eps = params["eps"]
    if eps is None:
        if min_pts > 1:
            kd = kneighbors(X, min_pts - 1)[0][:, -1]
        else:
            kd = np.zeros(n)
        eps = float(np.percentile(kd, params["eps_percentile"]))
    labels, core, near = dbscan(X, eps, min_pts)
    if not core.any():
        # no dense region at all: fall back to the k-distance itself
        near = kneighbors(X, max(min_pts - 1, 1))[0][:, -1]
    meta = {"eps": eps, "min_pts": min_pts, "n_core": int(core.sum()),
            "n_clusters": int(labels.max() + 1) if core.any() else 0}
    return Fit(near, labels == -1, meta, {"cluster": labels, "core": core})


# ---------------------------------------------------------------------------
# OPTICS
# ---------------------------------------------------------------------------

_COMPACT_EVERY = 512


def optics(X: np.ndarray, min_pts: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """OPTICS ordering with unbounded radius.

    Returns ``(ordering, reachability, core_distance)``; the first row of the
    ordering has infinite reachability. The next row is always the unprocessed
    one with the smallest reachability, lowest index first on ties.
    """
    n = X.shape[0]
    if min_pts > 1:
        core_dist = kneighbors(X, min_pts - 1)[0][:, -1]
    else:
        core_dist = np.zeros(n)
    reach = np.full(n, np.inf)
    key = np.full(n, np.inf)
    done = np.zeros(n, dtype=bool)
    remaining = np.arange(n)
    ordering = np.empty(n, dtype=np.int64)
    current = 0
    for step in range(n):
        ordering[step] = current
        done[current] = True
        key[current] = np.inf
        if step + 1 == n:
            break
        if step % _COMPACT_EVERY == 0:
            remaining = remaining[~done[remaining]]
        cand = remaining
        d = cdist(X[current:current + 1], X[cand])[0]
        new = np.maximum(core_dist[current], d)
        better = (new < reach[cand]) & ~done[cand]
        upd = cand[better]
        reach[upd] = new[better]
        key[upd] = new[better]
        current = int(np.argmin(key))
    return ordering, reach, core_dist


@detector("OPTICS")
def score_optics(X, params, seed) -> Fit:
    """Reachability distance.

    The first row of the ordering has no reachability; it is scored by its own
    core distance, the smallest reachability any predecessor could give it.
    """
    n = X.shape[0]
    min_pts = params["min_pts"]
    check_count("min_pts", min_pts, n)
    ordering, reach, core_dist = optics(X, min_pts)
    score = np.where(np.isfinite(reach), reach, core_dist)
    cut = np.percentile(score, 100 * params["label_quantile"])
    rank = np.empty(n, dtype=np.int64)
    rank[ordering] = np.arange(n)
    return Fit(score, score > cut, {"label_cutoff": cut},
               {"order_position": rank, "core_distance": core_dist})
