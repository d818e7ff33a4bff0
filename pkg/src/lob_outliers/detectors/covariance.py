"""Mahalanobis-distance detectors: empirical covariance, FAST-MCD and the
reweighted elliptic envelope."""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_triangular
from scipy.stats import chi2

from ._base import ConvergenceError, Fit, ParameterError, SingularCovarianceError, detector

RIDGE_SCALE = 1e-6
_COND_LIMIT = 1e-12


def mle_cov(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sample mean and maximum-likelihood (divide-by-n) covariance."""
    mu = X.mean(axis=0)
    D = X - mu
    return mu, (D.T @ D) / X.shape[0]


def _is_singular(cov: np.ndarray) -> bool:
    w = np.linalg.eigvalsh(cov)
    return w[-1] <= 0 or w[0] <= _COND_LIMIT * w[-1]


def _cholesky(cov: np.ndarray, fallback_trace: float | None = None):
    """Cholesky factor, ridge-regularized once if ``cov`` is (near) singular.

    Returns ``(L, ridge)``. The ridge is ``1e-6 * trace / p``; when the trace
    itself is zero ``fallback_trace`` supplies the scale.
    """
    p = cov.shape[0]
    ridge = 0.0
    if _is_singular(cov):
        trace = np.trace(cov)
        if trace <= 0 and fallback_trace is not None:
            trace = fallback_trace
        ridge = RIDGE_SCALE * trace / p
        cov = cov + ridge * np.eye(p)
        if ridge <= 0 or _is_singular(cov):
            raise SingularCovarianceError("covariance is singular even after ridge regularization")
    return np.linalg.cholesky(cov), ridge


def mahalanobis_sq(X, mu, cov, fallback_trace=None) -> tuple[np.ndarray, float]:
    """Squared Mahalanobis distance of every row; returns ``(d2, ridge)``."""
    L, ridge = _cholesky(cov, fallback_trace)
    Z = solve_triangular(L, (X - mu).T, lower=True)
    return np.einsum("ij,ij->j", Z, Z), ridge


def _logdet(cov: np.ndarray) -> float:
    sign, val = np.linalg.slogdet(cov)
    return val if sign > 0 else -np.inf


@detector("EC")
def score_empirical_covariance(X, params, seed) -> Fit:
    """Squared Mahalanobis distance from the sample mean under the sample covariance."""
    mu, cov = mle_cov(X)
    d2, ridge = mahalanobis_sq(X, mu, cov)
    cut = np.percentile(d2, params["percentile"])
    return Fit(d2, d2 > cut, {"location": mu, "covariance": cov, "ridge": ridge,
                              "label_cutoff": cut}, {})


# ---------------------------------------------------------------------------
# FAST-MCD
# ---------------------------------------------------------------------------

class _McdState:
    __slots__ = ("subset", "mu", "cov", "logdet")

    def __init__(self, subset, mu, cov, logdet):
        self.subset, self.mu, self.cov, self.logdet = subset, mu, cov, logdet


def _state(X, subset) -> _McdState:
    mu, cov = mle_cov(X[subset])
    return _McdState(subset, mu, cov, _logdet(cov))


def _c_step(X, st: _McdState, h: int, full_trace: float) -> _McdState:
    d2, _ = mahalanobis_sq(X, st.mu, st.cov, fallback_trace=full_trace)
    subset = np.sort(np.argpartition(d2, h - 1)[:h])
    return _state(X, subset)


def fast_mcd(X: np.ndarray, h: int, rng: np.random.Generator, n_starts=500, n_best=10,
             tol=1e-7, max_csteps=500) -> _McdState:
    """Minimum covariance determinant h-subset by random starts plus C-steps.

    Each start is a random (p+1)-subset (grown until its covariance is
    nonsingular), improved by two C-steps; the ``n_best`` lowest determinants
    are then iterated to convergence.
    """
    n, p = X.shape
    full_trace = float(np.trace(mle_cov(X)[1]))
    starts = []
    for _ in range(n_starts):
        perm = rng.permutation(n)
        size = min(p + 1, h)
        st = _state(X, perm[:size])
        while st.logdet == -np.inf and size < h:
            size += 1
            st = _state(X, perm[:size])
        for _ in range(2):
            if st.logdet == -np.inf:
                break
            st = _c_step(X, st, h, full_trace)
        starts.append(st)

    # stable ordering so equal determinants keep their draw order
    best = sorted(range(len(starts)), key=lambda i: starts[i].logdet)[:n_best]
    winner = None
    for i in best:
        st = starts[i]
        if st.subset.size != h:
            st = _c_step(X, st, h, full_trace)
        for it in range(max_csteps):
            if st.logdet == -np.inf:
                break
            new = _c_step(X, st, h, full_trace)
            # relative determinant change below tol, or subset fixed
            done = np.array_equal(new.subset, st.subset) or (
                st.logdet - new.logdet < -np.log1p(-tol))
            if new.logdet <= st.logdet:
                st = new
            if done:
                break
        else:
            raise ConvergenceError("MCD C-steps did not converge", max_csteps)
        if winner is None or st.logdet < winner.logdet:
            winner = st
    return winner


def _consistency(X, mu, cov, full_trace) -> tuple[np.ndarray, np.ndarray, float]:
    """Rescale ``cov`` so the median squared distance matches the chi-squared median."""
    p = X.shape[1]
    d2, _ = mahalanobis_sq(X, mu, cov, fallback_trace=full_trace)
    med = np.median(d2)
    factor = med / chi2.ppf(0.5, p) if med > 0 else 1.0
    return cov * factor, d2 / factor, factor


def _mcd_core(X, params, seed):
    n, p = X.shape
    alpha = params["contamination"]
    if not 0 <= alpha < 0.5:
        raise ParameterError("contamination must lie in [0, 0.5)")
    h = int(np.floor(n * (1 - alpha)))
    if h <= p:
        raise ParameterError(f"subset size h={h} must exceed the dimension p={p}")
    rng = np.random.default_rng(seed)
    st = fast_mcd(X, h, rng, params["n_starts"], params["n_best"], params["tol"],
                  params["max_csteps"])
    full_trace = float(np.trace(mle_cov(X)[1]))
    cov, d2, factor = _consistency(X, st.mu, st.cov, full_trace)
    in_subset = np.zeros(n, dtype=bool)
    in_subset[st.subset] = True
    meta = {
        "h": h,
        "raw_location": st.mu,
        "raw_covariance": st.cov,
        "raw_det": float(np.exp(st.logdet)),
        "exact_fit": st.logdet == -np.inf,
        "consistency_factor": factor,
        "location": st.mu,
        "covariance": cov,
    }
    return d2, meta, in_subset, full_trace


@detector("MCD", min_rows=3)
def score_mcd(X, params, seed) -> Fit:
    """Robust squared Mahalanobis distance under the FAST-MCD estimate.

    Labels: distance above the chi-squared ``1 - contamination`` quantile.
    """
    d2, meta, in_subset, _ = _mcd_core(X, params, seed)
    cut = chi2.ppf(1 - params["contamination"], X.shape[1])
    meta["label_cutoff"] = cut
    return Fit(d2, d2 > cut, meta, {"mcd_subset": in_subset})


@detector("EE", min_rows=3)
def score_elliptic_envelope(X, params, seed) -> Fit:
    """MCD followed by one reweighting step.

    Rows whose robust squared distance is within the chi-squared
    ``reweight_quantile`` re-estimate location and scatter (with the same
    median consistency rescaling as MCD).
    """
    d2, meta, in_subset, full_trace = _mcd_core(X, params, seed)
    p = X.shape[1]
    keep = d2 <= chi2.ppf(params["reweight_quantile"], p)
    if keep.sum() <= p:
        raise SingularCovarianceError("too few rows survive reweighting")
    mu, cov = mle_cov(X[keep])
    cov, d2_rw, factor = _consistency(X, mu, cov, full_trace)
    cut = chi2.ppf(1 - params["contamination"], p)
    meta.update({"location": mu, "covariance": cov, "reweight_factor": factor,
                 "n_reweighted": int(keep.sum()), "label_cutoff": cut})
    return Fit(d2_rw, d2_rw > cut, meta, {"mcd_subset": in_subset, "reweight_mask": keep})
