"""Histogram-based outlier score (static bin width, independent features)."""

from __future__ import annotations

import numpy as np

from ._base import Fit, ParameterError, detector, quantile_labels


def column_log_density(x: np.ndarray, n_bins: int, floor: float) -> tuple[np.ndarray, dict]:
    """-log density of each value under an equal-width histogram of ``x``."""
    lo, hi = float(x.min()), float(x.max())
    if hi == lo:
        # a single-valued column carries no information
        return np.zeros(x.size), {"lo": lo, "hi": hi, "width": 0.0}
    width = (hi - lo) / n_bins
    bins = np.minimum(((x - lo) / width).astype(np.int64), n_bins - 1)
    counts = np.bincount(bins, minlength=n_bins)
    density = np.maximum(counts / x.size / width, floor)
    return -np.log(density[bins]), {"lo": lo, "hi": hi, "width": width, "counts": counts}


@detector("HBOS")
def score_hbos(X, params, seed) -> Fit:
    n_bins = params["n_bins"]
    if not isinstance(n_bins, (int, np.integer)) or n_bins < 1:
        raise ParameterError("n_bins must be a positive integer")
    score = np.zeros(X.shape[0])
    hists = []
    for j in range(X.shape[1]):
        s, h = column_log_density(X[:, j], n_bins, params["density_floor"])
        score += s
        hists.append(h)
    return Fit(score, quantile_labels(score, params["contamination"]),
               {"histograms": hists}, {})
