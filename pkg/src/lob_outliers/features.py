"""Microstructure features and the standardized matrix handed to detectors.

Rolling quantities (volatilities, momentum) are returned in "valid" form: the
output is shorter than the input and its last element belongs to the last bar.
Every value at bar ``t`` is computed from bars at or before ``t``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .market_data import LobRecord, to_arrays


class FeatureError(ValueError):
    pass


@dataclass(frozen=True)
class FeatureParams:
    vol_window: int = 10
    rv_window: int = 30
    depth_levels: int = 5
    momentum_window: int = 5

    @property
    def warmup(self) -> int:
        """Leading bars without a full set of features."""
        return max(self.vol_window, self.rv_window, self.momentum_window, 1)


FEATURE_COLUMNS = (
    "exec_price",
    "spread",
    "imbalance",
    "trade_volume",
    "bid_depth",
    "ask_depth",
    "inter_arrival",
    "immediate_vol",
    "realized_vol",
    "amihud",
    "momentum",
)


@dataclass(frozen=True)
class FeatureMatrix:
    """Standardized n x p feature matrix with row provenance.

    ``momentum`` and ``close`` hold the unstandardized values for the same rows;
    the signal and backtest stages read them directly.
    """

    values: np.ndarray
    col_names: tuple[str, ...]
    col_means: np.ndarray
    col_stds: np.ndarray
    row_timestamps: np.ndarray
    source_index: np.ndarray
    momentum: np.ndarray
    close: np.ndarray
    dropped_columns: dict = field(default_factory=dict)
    excluded_rows: dict = field(default_factory=dict)

    @property
    def shape(self):
        return self.values.shape

    def __len__(self):
        return self.values.shape[0]


# ---------------------------------------------------------------------------
# Single features
# ---------------------------------------------------------------------------

def compute_spread(record: LobRecord) -> float:
    return record.ask_px[0] - record.bid_px[0]


def compute_imbalance(v_bid, v_ask):
    """(V_b - V_a) / (V_b + V_a); scalars or arrays."""
    v_bid = np.asarray(v_bid, dtype=float)
    v_ask = np.asarray(v_ask, dtype=float)
    total = v_bid + v_ask
    if np.any(total <= 0):
        raise FeatureError("imbalance undefined: both book sides are empty")
    out = (v_bid - v_ask) / total
    return float(out) if out.ndim == 0 else out


def compute_depth(record: LobRecord, levels: int) -> tuple[float, float]:
    if not 1 <= levels <= record.levels:
        raise FeatureError(f"depth level {levels} outside 1..{record.levels}")
    return float(sum(record.bid_sz[:levels])), float(sum(record.ask_sz[:levels]))


def compute_inter_arrival(timestamps) -> np.ndarray:
    """Seconds between consecutive millisecond timestamps (length n - 1)."""
    ts = np.asarray(timestamps, dtype=np.int64)
    if ts.size < 2:
        raise FeatureError("need at least two timestamps")
    d = np.diff(ts)
    if np.any(d < 0):
        raise FeatureError("timestamps decrease")
    return d / 1000.0


def immediate_volatility(closes, window: int = 10) -> np.ndarray:
    """Trailing population std of price differences over ``window`` diffs.

    Output element ``k`` belongs to bar ``k + window``.
    """
    closes = np.asarray(closes, dtype=float)
    if window < 2:
        raise FeatureError("immediate volatility window must be >= 2")
    if closes.size < window + 1:
        raise FeatureError(f"need at least {window + 1} prices, got {closes.size}")
    return sliding_window_view(np.diff(closes), window).std(axis=1)


def log_returns(closes) -> np.ndarray:
    closes = np.asarray(closes, dtype=float)
    if np.any(closes <= 0):
        raise FeatureError("log-returns need strictly positive prices")
    return np.diff(np.log(closes))


def realized_volatility(closes, window: int = 30) -> np.ndarray:
    """sqrt of the trailing sum of squared log-returns; element ``k`` is bar ``k + window``."""
    if window < 1:
        raise FeatureError("realized volatility window must be >= 1")
    r = log_returns(closes)
    if r.size < window:
        raise FeatureError(f"need at least {window + 1} prices, got {r.size + 1}")
    return np.sqrt(sliding_window_view(r * r, window).sum(axis=1))


def amihud_illiquidity(ret, volume):
    """|r| / v. Raises if any volume is zero."""
    ret = np.asarray(ret, dtype=float)
    volume = np.asarray(volume, dtype=float)
    if np.any(volume <= 0):
        raise FeatureError("Amihud ratio undefined for zero volume")
    out = np.abs(ret) / volume
    return float(out) if out.ndim == 0 else out


def compute_momentum(closes, window: int = 5) -> np.ndarray:
    """Simple return over ``window`` bars; element ``k`` is bar ``k + window``."""
    closes = np.asarray(closes, dtype=float)
    if window < 1:
        raise FeatureError("momentum window must be >= 1")
    if closes.size <= window:
        raise FeatureError(f"need more than {window} prices, got {closes.size}")
    base = closes[:-window]
    return (closes[window:] - base) / base


# ---------------------------------------------------------------------------
# Matrix assembly
# ---------------------------------------------------------------------------

def raw_features(records: Sequence[LobRecord], params: FeatureParams = FeatureParams()):
    """Unstandardized feature columns for bars ``warmup .. n-1``.

    Returns ``(columns, rows)`` where ``columns`` maps name -> array and
    ``rows`` holds the source record index of each entry.
    """
    n = len(records)
    warm = params.warmup
    if n <= warm + 1:
        raise FeatureError(f"series of {n} bars is too short for warm-up of {warm}")
    a = to_arrays(records)
    L = a["bid_sz"].shape[1]
    if not 1 <= params.depth_levels <= L:
        raise FeatureError(f"depth level {params.depth_levels} outside 1..{L}")
    idx = np.arange(warm, n)
    close = a["close"]

    ret = log_returns(close)
    iv = immediate_volatility(close, params.vol_window)
    rv = realized_volatility(close, params.rv_window)
    mom = compute_momentum(close, params.momentum_window)
    gaps = compute_inter_arrival(a["ts"])

    cols = {
        "exec_price": close[idx],
        "spread": a["ask_px"][idx, 0] - a["bid_px"][idx, 0],
        "trade_volume": a["volume"][idx],
        "bid_depth": a["bid_sz"][idx, : params.depth_levels].sum(axis=1),
        "ask_depth": a["ask_sz"][idx, : params.depth_levels].sum(axis=1),
        "inter_arrival": gaps[idx - 1],
        "immediate_vol": iv[idx - params.vol_window],
        "realized_vol": rv[idx - params.rv_window],
        "momentum": mom[idx - params.momentum_window],
    }
    vb = a["bid_sz"][idx].sum(axis=1)
    va = a["ask_sz"][idx].sum(axis=1)
    vol = cols["trade_volume"]
    with np.errstate(divide="ignore", invalid="ignore"):
        cols["imbalance"] = np.where(vb + va > 0, (vb - va) / (vb + va), np.nan)
        cols["amihud"] = np.where(vol > 0, np.abs(ret[idx - 1]) / vol, np.nan)
    cols = {name: cols[name] for name in FEATURE_COLUMNS}
    return cols, idx, a


def build_feature_matrix(
    records: Sequence[LobRecord], params: FeatureParams = FeatureParams()
) -> FeatureMatrix:
    """Assemble, clean and z-score the feature set.

    Rows with zero traded volume (Amihud undefined) or an empty book
    (imbalance undefined) are excluded and recorded in ``excluded_rows``;
    columns with a single distinct value are dropped and recorded in
    ``dropped_columns``.
    """
    cols, idx, a = raw_features(records, params)

    excluded = {}
    keep = np.ones(idx.size, dtype=bool)
    for name, reason in (("amihud", "zero trade volume"), ("imbalance", "empty book")):
        bad = ~np.isfinite(cols[name])
        for i in np.flatnonzero(bad & keep):
            excluded[int(idx[i])] = reason
        keep &= ~bad
    if keep.sum() < 2:
        raise FeatureError("fewer than two usable rows after exclusions")

    names, data, dropped = [], [], {}
    for name, col in cols.items():
        col = col[keep]
        if not np.all(np.isfinite(col)):
            raise FeatureError(f"non-finite values in column {name}")
        if col.max() == col.min():
            dropped[name] = "constant"
            continue
        names.append(name)
        data.append(col)
    if not data:
        raise FeatureError("every feature column is constant")

    raw = np.column_stack(data)
    mu = raw.mean(axis=0)
    sd = raw.std(axis=0)
    z = (raw - mu) / sd

    rows = idx[keep]
    return FeatureMatrix(
        values=z,
        col_names=tuple(names),
        col_means=mu,
        col_stds=sd,
        row_timestamps=a["ts"][rows],
        source_index=rows,
        momentum=cols["momentum"][keep],
        close=a["close"][rows],
        dropped_columns=dropped,
        excluded_rows=excluded,
    )


def write_feature_csv(fm: FeatureMatrix, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["ts", *fm.col_names])
        for ts, row in zip(fm.row_timestamps.tolist(), fm.values.tolist()):
            w.writerow([ts, *(repr(v) for v in row)])
