"""One-class SVM with an RBF kernel, solved in the dual by SMO.

Dual problem (coefficients scaled to sum to one)::

    min_a  1/2 a' K a    s.t.  0 <= a_i <= 1/(nu n),  sum(a) = 1

The decision value is ``sum_i a_i K(x_i, x) - rho``; the anomaly score is its
negation, so rows outside the learned boundary score positive.
"""

from __future__ import annotations

from collections import OrderedDict

import numpy as np

from ._base import ConvergenceError, Fit, ParameterError, detector

TAU = 1e-12


class RbfKernel:
    """Kernel columns ``K[:, i]`` computed on demand with a bounded LRU cache."""

    def __init__(self, X: np.ndarray, gamma: float, cache_columns: int):
        self.X = X
        self.gamma = gamma
        self.sq = np.einsum("ij,ij->i", X, X)
        self.cache: OrderedDict[int, np.ndarray] = OrderedDict()
        self.capacity = max(2, cache_columns)

    def column(self, i: int) -> np.ndarray:
        col = self.cache.get(i)
        if col is not None:
            self.cache.move_to_end(i)
            return col
        d2 = self.sq + self.sq[i] - 2.0 * (self.X @ self.X[i])
        col = np.exp(-self.gamma * np.maximum(d2, 0.0))
        col[i] = 1.0
        self.cache[i] = col
        if len(self.cache) > self.capacity:
            self.cache.popitem(last=False)
        return col

    def block(self, idx: np.ndarray) -> np.ndarray:
        """``K[:, idx]`` without touching the cache."""
        d2 = self.sq[:, None] + self.sq[idx][None, :] - 2.0 * (self.X @ self.X[idx].T)
        return np.exp(-self.gamma * np.maximum(d2, 0.0))


def kernel_times(kernel: RbfKernel, alpha: np.ndarray, chunk: int = 256) -> np.ndarray:
    """``K @ alpha`` using only the columns with nonzero weight."""
    nz = np.flatnonzero(alpha)
    out = np.zeros(kernel.X.shape[0])
    for s in range(0, nz.size, chunk):
        idx = nz[s:s + chunk]
        out += kernel.block(idx) @ alpha[idx]
    return out


def solve_dual(kernel: RbfKernel, nu: float, tol: float = 1e-6, max_iter: int = 10_000):
    """SMO with second-order working-set selection.

    Returns ``(alpha, rho, gradient, iterations)``. Converged when the maximal
    KKT violation ``max_{a<C}(-G) + max_{a>0}(G)`` drops below ``tol``.
    ``rho`` is the smallest gradient over coefficients below the upper bound,
    so only rows at the upper bound can fall outside the boundary.
    """
    n = kernel.X.shape[0]
    C = 1.0 / (nu * n)
    alpha = np.zeros(n)
    m = int(np.floor(nu * n))
    alpha[:m] = C
    if m < n:
        alpha[m] = 1.0 - m * C
    alpha = np.clip(alpha, 0.0, C)
    G = kernel_times(kernel, alpha)

    it = 0
    while True:
        up = alpha < C
        low = alpha > 0
        neg = np.where(up, -G, -np.inf)
        i = int(np.argmax(neg))
        gmax = neg[i]
        gmax2 = np.max(np.where(low, G, -np.inf))
        if gmax + gmax2 < tol:
            break
        if it >= max_iter:
            raise ConvergenceError("one-class SVM dual did not reach tolerance", it)
        Qi = kernel.column(i)
        b = gmax + G
        cand = low & (b > 0)
        a = 1.0 + 1.0 - 2.0 * Qi
        a = np.where(a > 0, a, TAU)
        obj = np.where(cand, -(b * b) / a, np.inf)
        j = int(np.argmin(obj))
        if not np.isfinite(obj[j]):
            break
        Qj = kernel.column(j)

        quad = 2.0 - 2.0 * Qi[j]
        if quad <= 0:
            quad = TAU
        delta = (G[i] - G[j]) / quad
        total = alpha[i] + alpha[j]
        ai, aj = alpha[i] - delta, alpha[j] + delta
        if total > C:
            if ai > C:
                ai, aj = C, total - C
        elif aj < 0:
            aj, ai = 0.0, total
        if total > C:
            if aj > C:
                aj, ai = C, total - C
        elif ai < 0:
            ai, aj = 0.0, total
        di, dj = ai - alpha[i], aj - alpha[j]
        alpha[i], alpha[j] = ai, aj
        G += Qi * di + Qj * dj
        it += 1

    # snap bound values so the free/bounded split is exact
    alpha[np.isclose(alpha, C, rtol=0, atol=1e-15)] = C
    alpha[np.abs(alpha) < 1e-15] = 0.0
    G = kernel_times(kernel, alpha)
    below = alpha < C
    rho = float(G[below].min()) if below.any() else float(G.max())
    return alpha, rho, G, it


@detector("OCSVM")
def score_ocsvm(X, params, seed) -> Fit:
    n, p = X.shape
    nu = params["nu"]
    if not 0 < nu <= 1:
        raise ParameterError("nu must lie in (0, 1]")
    gamma = params["gamma"]
    if gamma is None:
        var = X.var()
        gamma = 1.0 / (p * var) if var > 0 else 1.0 / p
    if not gamma > 0:
        raise ParameterError("gamma must be positive")
    cache_cols = int(params["cache_mb"] * 2**20 // (8 * n))
    kernel = RbfKernel(X, gamma, cache_cols)
    alpha, rho, G, it = solve_dual(kernel, nu, params["tol"], params["max_iter"])
    score = rho - G
    C = 1.0 / (nu * n)
    meta = {
        "gamma": gamma,
        "rho": rho,
        "iterations": it,
        "n_support": int((alpha > 0).sum()),
        "n_at_bound": int((alpha >= C).sum()),
        "dual_objective": 0.5 * float(alpha @ G),
    }
    return Fit(score, score > 0, meta, {"dual_coef": alpha})
