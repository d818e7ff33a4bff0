"""From raw anomaly scores to directed mean-reversion trade signals.

Scores are min-max scaled over the whole series, flagged above a percentile
threshold (or by the detector's own labels in ``native`` mode), and every
flagged bar with nonzero momentum becomes a trade against that momentum.
"""

from __future__ import annotations

import bisect
import csv
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

MODES = ("percentile", "native")


class SignalError(ValueError):
    pass


@dataclass(frozen=True)
class TradeSignal:
    timestamp: int
    direction: str  # "long" | "short"
    source_score: float
    momentum_at_signal: float
    index: int  # bar position in the aligned close series


@dataclass
class SignalSeries:
    detector: object
    normalized_scores: np.ndarray
    threshold: float
    flags: np.ndarray
    signals: list[TradeSignal] = field(default_factory=list)
    mode: str = "percentile"


def normalize_scores(raw) -> np.ndarray:
    """Min-max scale to [0, 1] over the full vector."""
    raw = np.asarray(raw, dtype=float)
    if raw.size < 2:
        raise SignalError("need at least two scores to normalize")
    if not np.all(np.isfinite(raw)):
        raise SignalError("scores must be finite")
    lo, hi = raw.min(), raw.max()
    if hi == lo:
        raise SignalError("degenerate scores: every score is equal")
    out = (raw - lo) / (hi - lo)
    # pin the endpoints against rounding in the division
    out[raw == lo] = 0.0
    out[raw == hi] = 1.0
    return out


def compute_threshold(scores, q: float = 0.95) -> float:
    """Linear-interpolation percentile ``q`` of ``scores``.

    With fewer than ``1 / (1 - q)`` scores the percentile cannot be resolved;
    a warning is issued and the nearest-rank value is used instead.
    """
    scores = np.asarray(scores, dtype=float)
    if not 0 <= q <= 1:
        raise SignalError("percentile q must lie in [0, 1]")
    if scores.size == 0:
        raise SignalError("no scores")
    if q < 1 and scores.size < math.ceil(1 / (1 - q) - 1e-9):
        warnings.warn(
            f"{scores.size} scores cannot resolve the {100 * q:g}th percentile; "
            "using nearest rank", RuntimeWarning, stacklevel=2)
        rank = max(1, math.ceil(q * scores.size))
        return float(np.sort(scores)[rank - 1])
    return float(np.percentile(scores, 100 * q))


def binarize(scores, threshold: float) -> np.ndarray:
    """Flag scores strictly greater than ``threshold``."""
    return np.asarray(scores, dtype=float) > threshold


def rolling_threshold(scores, q: float = 0.95, min_history: int = 100) -> np.ndarray:
    """Expanding-window threshold using only scores up to each bar (experimental).

    Bars with less than ``min_history`` prior scores get ``+inf`` (never flagged).
    """
    scores = np.asarray(scores, dtype=float)
    out = np.full(scores.size, np.inf)
    seen: list[float] = []
    for t, v in enumerate(scores.tolist()):
        bisect.insort(seen, v)
        if t < min_history:
            continue
        pos = q * t
        lo = int(math.floor(pos))
        hi = min(lo + 1, t)
        out[t] = seen[lo] + (pos - lo) * (seen[hi] - seen[lo])
    return out


def generate_signals(flags, momentum, timestamps=None, scores=None) -> list[TradeSignal]:
    """One signal per flagged bar: short on positive momentum, long on negative,
    nothing on zero."""
    flags = np.asarray(flags, dtype=bool)
    momentum = np.asarray(momentum, dtype=float)
    if flags.shape != momentum.shape:
        raise SignalError("flags and momentum are not aligned")
    ts = np.arange(flags.size) if timestamps is None else np.asarray(timestamps)
    sc = np.full(flags.size, np.nan) if scores is None else np.asarray(scores, dtype=float)
    out = []
    for i in np.flatnonzero(flags):
        m = float(momentum[i])
        if not np.isfinite(m):
            raise SignalError(f"momentum undefined at bar {i}")
        if m == 0:
            continue
        out.append(TradeSignal(int(ts[i]), "short" if m > 0 else "long",
                               float(sc[i]), m, int(i)))
    return out


def build_signal_series(score_vector, momentum, timestamps, mode: str = "percentile",
                        q: float = 0.95, rolling: bool = False) -> SignalSeries:
    """Run normalization, thresholding and signal generation for one detector."""
    if mode not in MODES:
        raise SignalError(f"mode must be one of {MODES}")
    s = normalize_scores(score_vector.raw_scores)
    if mode == "native":
        if score_vector.native_labels is None:
            raise SignalError(f"{score_vector.detector.kind} has no native labels")
        tau = -math.inf
        flags = np.asarray(score_vector.native_labels, dtype=bool)
    elif rolling:
        taus = rolling_threshold(s, q)
        tau = float("nan")
        flags = s > taus
    else:
        tau = compute_threshold(s, q)
        flags = binarize(s, tau)
    sigs = generate_signals(flags, momentum, timestamps, s)
    return SignalSeries(score_vector.detector, s, tau, flags, sigs, mode)


def write_signals_csv(signals: Sequence[TradeSignal], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["ts", "direction", "score", "momentum"])
        for s in signals:
            w.writerow([s.timestamp, s.direction, repr(s.source_score), repr(s.momentum_at_signal)])
