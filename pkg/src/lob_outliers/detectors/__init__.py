"""Thirteen unsupervised outlier detectors behind one fit-and-score contract.

Every ``score_*`` function takes an ``n x p`` matrix (or a ``FeatureMatrix``)
and a :class:`DetectorSpec` and returns a :class:`ScoreVector` whose raw
scores grow with anomalousness.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from typing import Sequence

from ._base import (
    DEFAULT_PARAMS,
    KINDS,
    ConvergenceError,
    DetectorError,
    DetectorFailure,
    DetectorSpec,
    ParameterError,
    ScoreVector,
    SingularCovarianceError,
)
from .cluster import score_cblof, score_kmeans
from .covariance import score_elliptic_envelope, score_empirical_covariance, score_mcd
from .density import score_dbscan, score_knn, score_lof, score_optics
from .histogram import score_hbos
from .iforest import score_isolation_forest
from .subspace import score_sod
from .svm import score_ocsvm

SCORERS = {
    "EC": score_empirical_covariance,
    "MCD": score_mcd,
    "EE": score_elliptic_envelope,
    "HBOS": score_hbos,
    "OCSVM": score_ocsvm,
    "DBSCAN": score_dbscan,
    "OPTICS": score_optics,
    "ISOF": score_isolation_forest,
    "LOF": score_lof,
    "CBLOF": score_cblof,
    "KMEANS": score_kmeans,
    "KNN": score_knn,
    "SOD": score_sod,
}


def score(X, spec: DetectorSpec) -> ScoreVector:
    """Dispatch ``spec`` to its detector and record the wall time."""
    t0 = time.perf_counter()
    sv = SCORERS[spec.kind](X, spec)
    sv.fit_metadata["wall_time"] = time.perf_counter() - t0
    return sv


def default_specs(seed: int = 0, kinds: Sequence[str] = KINDS) -> list[DetectorSpec]:
    return [DetectorSpec(k, {}, seed) for k in kinds]


def run_all_detectors(X, specs: Sequence[DetectorSpec], workers: int = 1):
    """Score ``X`` with every spec.

    Returns one entry per spec, in order: a :class:`ScoreVector`, or a
    :class:`DetectorFailure` when that detector raised.
    """
    if not specs:
        raise ParameterError("no detector specs given")

    def one(spec):
        try:
            return score(X, spec)
        except Exception as exc:  # noqa: BLE001 - failures are reported per slot
            return DetectorFailure(spec, exc)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(one, specs))
    return [one(s) for s in specs]


__all__ = [
    "DEFAULT_PARAMS", "KINDS", "SCORERS", "ConvergenceError", "DetectorError",
    "DetectorFailure", "DetectorSpec", "ParameterError", "ScoreVector",
    "SingularCovarianceError", "default_specs", "run_all_detectors", "score",
    *(f.__name__ for f in SCORERS.values()),
]
