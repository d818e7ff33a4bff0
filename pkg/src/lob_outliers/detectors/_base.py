"""Shared detector contract: specs, score vectors, errors, canonical row order."""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Any, Callable, NamedTuple

import numpy as np

KINDS = (
    "EC", "MCD", "EE", "HBOS", "OCSVM", "DBSCAN", "OPTICS",
    "ISOF", "LOF", "CBLOF", "KMEANS", "KNN", "SOD",
)
STOCHASTIC_KINDS = frozenset({"ISOF", "KMEANS", "CBLOF", "MCD", "EE", "OCSVM"})


class DetectorError(RuntimeError):
    pass


class ParameterError(DetectorError, ValueError):
    pass


class SingularCovarianceError(DetectorError):
    pass


class ConvergenceError(DetectorError):
    def __init__(self, message: str, iterations: int):
        self.iterations = iterations
        super().__init__(f"{message} (after {iterations} iterations)")


# Defaults that depend on (n, p) are callables, resolved at fit time.
DEFAULT_PARAMS: dict[str, dict[str, Any]] = {
    "EC": {"percentile": 97.5},
    "MCD": {"contamination": 0.05, "n_starts": 500, "n_best": 10, "tol": 1e-7,
            "max_csteps": 500},
    "EE": {"contamination": 0.05, "n_starts": 500, "n_best": 10, "tol": 1e-7,
           "max_csteps": 500, "reweight_quantile": 0.975},
    "HBOS": {"n_bins": lambda n, p: math.ceil(math.sqrt(n)), "density_floor": 1e-12,
             "contamination": 0.05},
    "OCSVM": {"nu": 0.05, "gamma": None, "tol": 1e-6, "max_iter": 10_000,
              "cache_mb": 256},
    "DBSCAN": {"min_pts": lambda n, p: 2 * p, "eps": None, "eps_percentile": 90.0},
    "OPTICS": {"min_pts": lambda n, p: 2 * p, "label_quantile": 0.95},
    "ISOF": {"n_trees": 100, "subsample": lambda n, p: min(256, n), "label_threshold": 0.5},
    "LOF": {"k": 20, "label_threshold": 1.5},
    "CBLOF": {"n_clusters": 8, "alpha": 0.9, "beta": 5.0, "use_weights": False,
              "tol": 1e-6, "max_iter": 300, "contamination": 0.05},
    "KMEANS": {"n_clusters": 8, "tol": 1e-6, "max_iter": 300, "contamination": 0.05},
    "KNN": {"k": 5, "contamination": 0.05},
    "SOD": {"ref_set": 20, "n_neighbors": None, "alpha": 0.8, "contamination": 0.05},
}


@dataclass(frozen=True)
class DetectorSpec:
    kind: str
    params: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        kind = self.kind.upper()
        if kind not in KINDS:
            raise ParameterError(f"unknown detector kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        unknown = set(self.params) - set(DEFAULT_PARAMS[kind])
        if unknown:
            raise ParameterError(f"{kind}: unknown parameter(s) {sorted(unknown)}")

    def resolve(self, n: int, p: int) -> dict:
        out = {}
        for key, default in DEFAULT_PARAMS[self.kind].items():
            val = self.params.get(key, default)
            out[key] = val(n, p) if callable(val) else val
        return out


@dataclass
class ScoreVector:
    """Per-row anomaly scores of one detector; larger means more anomalous."""

    detector: DetectorSpec
    raw_scores: np.ndarray
    native_labels: np.ndarray | None = None
    fit_metadata: dict = field(default_factory=dict)

    def __len__(self):
        return self.raw_scores.shape[0]


@dataclass
class DetectorFailure:
    """Placeholder for a spec that raised inside a batch run."""

    detector: DetectorSpec
    error: Exception

    def __str__(self):
        return f"{self.detector.kind}: {type(self.error).__name__}: {self.error}"


class Fit(NamedTuple):
    scores: np.ndarray
    labels: np.ndarray | None
    meta: dict
    row_meta: dict


def as_array(X) -> np.ndarray:
    X = np.asarray(getattr(X, "values", X), dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
        raise ParameterError(f"expected a non-empty 2-D matrix, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ParameterError("matrix contains non-finite entries")
    return X


def canonical_order(X: np.ndarray) -> np.ndarray:
    """Row order sorted lexicographically by value (first column most significant)."""
    return np.lexsort(X.T[::-1])


def detector(kind: str, min_rows: int = 2):
    """Wrap ``fn(X, params, rng_seed) -> Fit`` into the public ``score_*`` contract.

    The wrapped function sees rows in canonical order, which makes every
    detector (seeded ones included) equivariant under row permutation.
    """

    def wrap(fn: Callable[..., Fit]):
        @functools.wraps(fn)
        def score(X, spec: DetectorSpec | None = None) -> ScoreVector:
            spec = spec or DetectorSpec(kind)
            if spec.kind != kind:
                raise ParameterError(f"spec of kind {spec.kind} passed to {kind} scorer")
            A = as_array(X)
            n, p = A.shape
            if n < min_rows:
                raise ParameterError(f"{kind} needs at least {min_rows} rows, got {n}")
            params = spec.resolve(n, p)
            order = canonical_order(A)
            fit = fn(np.ascontiguousarray(A[order]), params, spec.seed)
            scores = np.empty(n)
            scores[order] = fit.scores
            labels = None
            if fit.labels is not None:
                labels = np.empty(n, dtype=bool)
                labels[order] = fit.labels
            meta = {"params": params, **fit.meta}
            for key, arr in fit.row_meta.items():
                out = np.empty_like(arr)
                out[order] = arr
                meta[key] = out
            if not np.all(np.isfinite(scores)):
                raise DetectorError(f"{kind} produced non-finite scores")
            return ScoreVector(spec, scores, labels, meta)

        score.kind = kind
        return score

    return wrap


def quantile_labels(scores: np.ndarray, contamination: float) -> np.ndarray:
    """Flag scores strictly above the (1 - contamination) quantile."""
    if not 0 < contamination < 1:
        raise ParameterError("contamination must lie in (0, 1)")
    return scores > np.percentile(scores, 100 * (1 - contamination))


def check_count(name: str, value: int, n: int, low: int = 1):
    if not isinstance(value, (int, np.integer)) or value < low:
        raise ParameterError(f"{name} must be an integer >= {low}, got {value!r}")
    if value >= n:
        raise ParameterError(f"{name}={value} must be smaller than the row count {n}")
