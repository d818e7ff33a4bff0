"""Subspace outlier degree (shared-nearest-neighbor reference sets)."""

from __future__ import annotations

import numpy as np
from scipy import sparse

from ._base import Fit, ParameterError, check_count, detector, quantile_labels
from .neighbors import kneighbors

_ROW_BLOCK = 2048


def snn_reference_sets(X: np.ndarray, ref_set: int, n_neighbors: int) -> np.ndarray:
    """Indices (n x ref_set) of each row's reference set.

    Every row's neighbor list holds itself plus its ``n_neighbors - 1``
    nearest rows. Candidates are ranked by shared-neighbor count (descending),
    then Euclidean distance, then index; the row itself is never selected.
    """
    n = X.shape[0]
    _, nn = kneighbors(X, n_neighbors - 1)
    cols = np.concatenate([np.arange(n)[:, None], nn], axis=1).ravel()
    rows = np.repeat(np.arange(n), n_neighbors)
    A = sparse.csr_matrix((np.ones(cols.size, dtype=np.int32), (rows, cols)), shape=(n, n))
    S = (A @ A.T).tocsr()
    S.sort_indices()

    out = np.empty((n, ref_set), dtype=np.int64)
    for start in range(0, n, _ROW_BLOCK):
        stop = min(start + _ROW_BLOCK, n)
        blk = S[start:stop]
        r = np.repeat(np.arange(start, stop), np.diff(blk.indptr))
        c = blk.indices.astype(np.int64)
        sim = blk.data
        other = c != r
        r, c, sim = r[other], c[other], sim[other]
        d = np.sqrt(((X[r] - X[c]) ** 2).sum(axis=1))
        order = np.lexsort((c, d, -sim, r))
        r, c = r[order], c[order]
        first = np.searchsorted(r, np.arange(start, stop))
        count = np.searchsorted(r, np.arange(start, stop), side="right") - first
        if np.any(count < ref_set):
            raise ParameterError("too few shared-neighbor candidates for the reference set")
        pos = first[:, None] + np.arange(ref_set)
        out[start:stop] = c[pos]
    return out


def sod_scores(X: np.ndarray, ref: np.ndarray, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    """Score each row against its reference set; returns ``(scores, n_relevant_dims)``."""
    R = X[ref]
    mu = R.mean(axis=1)
    var = R.var(axis=1)
    relevant = var < alpha * var.mean(axis=1, keepdims=True)
    dims = relevant.sum(axis=1)
    sq = np.where(relevant, (X - mu) ** 2, 0.0).sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        score = np.where(dims > 0, np.sqrt(sq / np.maximum(dims, 1)), 0.0)
    return score, dims


@detector("SOD")
def score_sod(X, params, seed) -> Fit:
    """Distance from the reference-set mean along low-variance features,
    divided by the square root of the number of such features."""
    n = X.shape[0]
    ref_set = params["ref_set"]
    check_count("ref_set", ref_set, n)
    n_nb = params["n_neighbors"] or ref_set + 1
    if n_nb < ref_set + 1:
        raise ParameterError("n_neighbors must be at least ref_set + 1")
    check_count("n_neighbors - 1", n_nb - 1, n)
    ref = snn_reference_sets(X, ref_set, n_nb)
    score, dims = sod_scores(X, ref, params["alpha"])
    return Fit(score, quantile_labels(score, params["contamination"]),
               {"n_neighbors": n_nb}, {"subspace_dims": dims})
