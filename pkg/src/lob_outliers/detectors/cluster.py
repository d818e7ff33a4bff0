"""Centroid detectors: k-means distance and cluster-based LOF."""

from __future__ import annotations

import numpy as np
from scipy.spatial.distance import cdist

from ._base import ConvergenceError, Fit, ParameterError, check_count, detector, quantile_labels


def farthest_point_seeds(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """First centroid drawn by ``rng``; each next one is the row farthest from all chosen."""
    first = int(rng.integers(X.shape[0]))
    chosen = [first]
    dmin = cdist(X, X[[first]])[:, 0]
    for _ in range(1, k):
        nxt = int(np.argmax(dmin))
        chosen.append(nxt)
        dmin = np.minimum(dmin, cdist(X, X[[nxt]])[:, 0])
    return X[chosen].copy()


def objective(X: np.ndarray, centroids: np.ndarray, labels: np.ndarray) -> float:
    """Within-cluster sum of squared distances."""
    diff = X - centroids[labels]
    return float(np.einsum("ij,ij->", diff, diff))


def kmeans(X: np.ndarray, k: int, rng: np.random.Generator, tol=1e-6, max_iter=300):
    """Lloyd iterations from farthest-point seeds.

    Returns ``(centroids, labels, history)`` where ``history`` holds the
    objective after every assignment step. Stops once no centroid moves by
    more than ``tol``; an empty cluster keeps its previous centroid.
    """
    centroids = farthest_point_seeds(X, k, rng)
    history = []
    for it in range(1, max_iter + 1):
        labels = cdist(X, centroids, "sqeuclidean").argmin(axis=1)
        history.append(objective(X, centroids, labels))
        new = centroids.copy()
        counts = np.bincount(labels, minlength=k)
        sums = np.zeros_like(centroids)
        np.add.at(sums, labels, X)
        filled = counts > 0
        new[filled] = sums[filled] / counts[filled, None]
        shift = np.sqrt(((new - centroids) ** 2).sum(axis=1)).max()
        centroids = new
        if shift <= tol:
            labels = cdist(X, centroids, "sqeuclidean").argmin(axis=1)
            history.append(objective(X, centroids, labels))
            return centroids, labels, history
    raise ConvergenceError("k-means did not converge", max_iter)


def _fit_kmeans(X, params, seed):
    k = params["n_clusters"]
    if not isinstance(k, (int, np.integer)) or k < 1:
        raise ParameterError("n_clusters must be a positive integer")
    if k > 1:
        check_count("n_clusters", k, X.shape[0])
    return kmeans(X, k, np.random.default_rng(seed), params["tol"], params["max_iter"])


@detector("KMEANS")
def score_kmeans(X, params, seed) -> Fit:
    """Euclidean distance to the assigned centroid."""
    centroids, labels, history = _fit_kmeans(X, params, seed)
    score = np.sqrt(((X - centroids[labels]) ** 2).sum(axis=1))
    return Fit(score, quantile_labels(score, params["contamination"]),
               {"centroids": centroids, "objective_history": history,
                "objective": history[-1]},
               {"cluster": labels})


def large_clusters(sizes: np.ndarray, alpha: float, beta: float) -> np.ndarray:
    """Boolean mask of "large" clusters by the cumulative-size / size-ratio rule.

    Clusters are ranked by size (descending, index on ties); the boundary is
    the first rank ``b`` whose cumulative size reaches ``alpha * n`` or whose
    size is at least ``beta`` times the next one.
    """
    order = np.lexsort((np.arange(sizes.size), -sizes))
    s = sizes[order]
    total = s.sum()
    cum = np.cumsum(s)
    b = s.size
    for i in range(s.size):
        if cum[i] >= alpha * total:
            b = i + 1
            break
        if i + 1 < s.size and (s[i + 1] == 0 or s[i] / s[i + 1] >= beta):
            b = i + 1
            break
    mask = np.zeros(sizes.size, dtype=bool)
    mask[order[:b]] = True
    return mask


@detector("CBLOF")
def score_cblof(X, params, seed) -> Fit:
    """Distance to own centroid for large-cluster members, to the nearest large
    centroid otherwise; optionally multiplied by the row's cluster size."""
    if not 0 < params["alpha"] <= 1 or not params["beta"] > 1:
        raise ParameterError("CBLOF needs 0 < alpha <= 1 and beta > 1")
    centroids, labels, history = _fit_kmeans(X, params, seed)
    k = centroids.shape[0]
    sizes = np.bincount(labels, minlength=k)
    large = large_clusters(sizes, params["alpha"], params["beta"])
    own = np.sqrt(((X - centroids[labels]) ** 2).sum(axis=1))
    to_large = cdist(X, centroids[large]).min(axis=1)
    score = np.where(large[labels], own, to_large)
    if params["use_weights"]:
        score = score * sizes[labels]
    return Fit(score, quantile_labels(score, params["contamination"]),
               {"centroids": centroids, "cluster_sizes": sizes, "large_clusters": large},
               {"cluster": labels})
