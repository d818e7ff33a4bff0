"""Order-book bar records: CSV ingest, validation and a labelled synthetic generator.

A record is one end-of-bar snapshot: the OHLC bar, traded volume and ``L``
levels of resting bid/ask liquidity. Prices and sizes are parsed from their
decimal strings and held at 8 fractional digits so that writing and re-reading
a file reproduces every value bit for bit.
"""

from __future__ import annotations

import csv
import hashlib
import io
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

DEFAULT_LEVELS = 10
BAR_MS = 60_000
# 2024-12-26 00:00:00 UTC
DEFAULT_START_MS = 1_735_171_200_000

_QUANT = Decimal("1e-8")

ANOMALY_KINDS = (
    "volume_spike",
    "volume_dust",
    "time_gap",
    "depth_withdrawal",
    "depth_inflation",
    "volatility_shock",
    "anomalous_calm",
)


class MarketDataError(ValueError):
    """Malformed input file or row."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class RecordValidationError(MarketDataError):
    """A record breaks one of the bar/book invariants."""


@dataclass(frozen=True)
class LobRecord:
    """One timestamped OHLC bar plus ``L`` book levels (level 1 first)."""

    timestamp: int
    open: float
    high: float
    low: float
    close: float
    volume: float
    bid_px: tuple[float, ...]
    bid_sz: tuple[float, ...]
    ask_px: tuple[float, ...]
    ask_sz: tuple[float, ...]

    @property
    def levels(self) -> int:
        return len(self.bid_px)

    @property
    def best_bid(self) -> float:
        return self.bid_px[0]

    @property
    def best_ask(self) -> float:
        return self.ask_px[0]

    def violations(self) -> list[str]:
        """Every broken invariant of this record, as short messages."""
        out = []
        if not (len(self.bid_px) == len(self.bid_sz) == len(self.ask_px) == len(self.ask_sz)):
            out.append("book level count mismatch")
            return out
        if self.levels < 1:
            out.append("book has no levels")
            return out
        if not self.low > 0:
            out.append("low is not positive")
        if self.low > self.high:
            out.append("low exceeds high")
        if not self.low <= self.open <= self.high:
            out.append("open outside [low, high]")
        if not self.low <= self.close <= self.high:
            out.append("close outside [low, high]")
        if self.volume < 0:
            out.append("negative volume")
        if min(self.bid_px) <= 0 or min(self.ask_px) <= 0:
            out.append("non-positive book price")
        if min(self.bid_sz) < 0 or min(self.ask_sz) < 0:
            out.append("negative book size")
        if any(a <= b for a, b in zip(self.bid_px, self.bid_px[1:])):
            out.append("bid prices not strictly decreasing")
        if any(a >= b for a, b in zip(self.ask_px, self.ask_px[1:])):
            out.append("ask prices not strictly increasing")
        if self.ask_px[0] < self.bid_px[0]:
            out.append("crossed book (best ask below best bid)")
        return out


@dataclass(frozen=True)
class AnomalySpec:
    """One injected anomaly family.

    ``magnitude`` is the multiplier applied to the affected quantity; for
    ``anomalous_calm`` it is the length, in bars, of each flat run.
    """

    kind: str
    rate: float
    magnitude: float


@dataclass(frozen=True)
class SyntheticConfig:
    n_records: int = 26_204
    base_price: float = 95_000.0
    base_volatility: float = 0.0008
    seed: int = 0
    anomaly_specs: tuple[AnomalySpec, ...] = (
        AnomalySpec("volume_spike", 0.01, 20.0),
        AnomalySpec("volume_dust", 0.005, 20.0),
        AnomalySpec("time_gap", 0.005, 10.0),
        AnomalySpec("depth_withdrawal", 0.005, 10.0),
        AnomalySpec("depth_inflation", 0.005, 10.0),
        AnomalySpec("volatility_shock", 0.005, 10.0),
        AnomalySpec("anomalous_calm", 0.005, 10.0),
    )
    levels: int = DEFAULT_LEVELS
    start_ms: int = DEFAULT_START_MS
    base_volume: float = 5.0
    # log-sd of baseline volume; kept small so a 10x spike stays > 3 sd out
    volume_dispersion: float = 0.1
    base_level_size: float = 2.0
    spread_bps: float = 0.5

    def __post_init__(self):
        if self.n_records < 2:
            raise ValueError("n_records must be at least 2")
        if not self.base_price > 0 or not self.base_volatility >= 0:
            raise ValueError("base_price must be positive and base_volatility non-negative")
        if self.levels < 1:
            raise ValueError("levels must be at least 1")
        if not self.volume_dispersion >= 0:
            raise ValueError("volume_dispersion must be non-negative")
        for spec in self.anomaly_specs:
            if spec.kind not in ANOMALY_KINDS:
                raise ValueError(f"unknown anomaly kind {spec.kind!r}")
            if not 0 <= spec.rate < 1:
                raise ValueError(f"{spec.kind}: rate must lie in [0, 1)")
            if not spec.magnitude > 0:
                raise ValueError(f"{spec.kind}: magnitude must be positive")
        if sum(s.rate for s in self.anomaly_specs) >= 0.5:
            raise ValueError("anomaly rates must sum to less than 0.5")


@dataclass
class LabeledSeries:
    records: list[LobRecord]
    labels: np.ndarray
    anomaly_kinds: list[str | None] = field(default_factory=list)

    def __post_init__(self):
        if len(self.labels) != len(self.records):
            raise ValueError("labels and records differ in length")
        if not self.anomaly_kinds:
            self.anomaly_kinds = [None] * len(self.records)

    def __len__(self):
        return len(self.records)


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

def csv_header(levels: int = DEFAULT_LEVELS) -> list[str]:
    cols = ["ts", "open", "high", "low", "close", "volume"]
    for i in range(1, levels + 1):
        cols += [f"bid_px_{i}", f"bid_sz_{i}"]
    for i in range(1, levels + 1):
        cols += [f"ask_px_{i}", f"ask_sz_{i}"]
    return cols


def _parse_decimal(text: str, name: str, line: int) -> float:
    try:
        d = Decimal(text.strip())
    except InvalidOperation:
        raise MarketDataError(f"column {name}: not a decimal number: {text!r}", line) from None
    if not d.is_finite():
        raise MarketDataError(f"column {name}: non-finite value {text!r}", line)
    return float(d.quantize(_QUANT))


def _fmt(x: float) -> str:
    s = f"{x:.8f}".rstrip("0")
    return s + "0" if s.endswith(".") else s


def quantize(x: float) -> float:
    """Round to the 8-digit decimal grid used for stored prices and sizes."""
    return float(f"{x:.8f}")


def parse_csv(path: str | Path, levels: int = DEFAULT_LEVELS) -> list[LobRecord]:
    """Read and validate a bar/book CSV file.

    Raises
    ------
    MarketDataError
        Bad header, wrong field count, unparsable value, or a timestamp that
        does not strictly increase.
    RecordValidationError
        A row that parses but violates a bar or book invariant.
    """
    header = csv_header(levels)
    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            got = next(reader)
        except StopIteration:
            raise MarketDataError("empty file: header row required", 1) from None
        if [c.strip() for c in got] != header:
            raise MarketDataError(
                f"header does not match the {levels}-level column layout", 1
            )
        prev_ts = None
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != len(header):
                raise MarketDataError(
                    f"expected {len(header)} fields, found {len(row)}", line
                )
            try:
                ts = int(row[0].strip())
            except ValueError:
                raise MarketDataError(f"column ts: not an integer: {row[0]!r}", line) from None
            vals = [_parse_decimal(t, header[j + 1], line) for j, t in enumerate(row[1:])]
            book = vals[5:]
            bids = book[: 2 * levels]
            asks = book[2 * levels:]
            rec = LobRecord(
                timestamp=ts,
                open=vals[0],
                high=vals[1],
                low=vals[2],
                close=vals[3],
                volume=vals[4],
                bid_px=tuple(bids[0::2]),
                bid_sz=tuple(bids[1::2]),
                ask_px=tuple(asks[0::2]),
                ask_sz=tuple(asks[1::2]),
            )
            bad = rec.violations()
            if bad:
                raise RecordValidationError("; ".join(bad), line)
            if prev_ts is not None:
                if ts == prev_ts:
                    raise MarketDataError(f"duplicate timestamp {ts}", line)
                if ts < prev_ts:
                    raise MarketDataError(f"timestamp {ts} precedes {prev_ts}", line)
            prev_ts = ts
            records.append(rec)
    return records


def _rows(records: Sequence[LobRecord]):
    for r in records:
        row = [str(r.timestamp), _fmt(r.open), _fmt(r.high), _fmt(r.low),
               _fmt(r.close), _fmt(r.volume)]
        for px, sz in zip(r.bid_px, r.bid_sz):
            row += [_fmt(px), _fmt(sz)]
        for px, sz in zip(r.ask_px, r.ask_sz):
            row += [_fmt(px), _fmt(sz)]
        yield row


def write_csv(records: Sequence[LobRecord], path: str | Path) -> None:
    """Serialize records in the column layout read by :func:`parse_csv`."""
    levels = records[0].levels if records else DEFAULT_LEVELS
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(csv_header(levels))
        w.writerows(_rows(records))


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

def validate_series(records: Iterable[LobRecord]) -> list[tuple[int, str]]:
    """Return ``(index, message)`` for every invariant violation in the series."""
    out = []
    prev = None
    for i, rec in enumerate(records):
        out.extend((i, msg) for msg in rec.violations())
        if prev is not None and rec.timestamp <= prev:
            out.append((i, "timestamp not strictly increasing"))
        prev = rec.timestamp
    return out


def to_arrays(records: Sequence[LobRecord]) -> dict[str, np.ndarray]:
    """Columnar float views of a record list (book arrays are n x L)."""
    return {
        "ts": np.array([r.timestamp for r in records], dtype=np.int64),
        "open": np.array([r.open for r in records]),
        "high": np.array([r.high for r in records]),
        "low": np.array([r.low for r in records]),
        "close": np.array([r.close for r in records]),
        "volume": np.array([r.volume for r in records]),
        "bid_px": np.array([r.bid_px for r in records], dtype=float),
        "bid_sz": np.array([r.bid_sz for r in records], dtype=float),
        "ask_px": np.array([r.ask_px for r in records], dtype=float),
        "ask_sz": np.array([r.ask_sz for r in records], dtype=float),
    }


# ---------------------------------------------------------------------------
# Synthetic generation
# ---------------------------------------------------------------------------

def _pick_rows(rng, free: np.ndarray, rate: float) -> np.ndarray:
    draw = rng.random(free.size) < rate
    return np.flatnonzero(draw & free)


def _pick_runs(rng, free: np.ndarray, rate: float, run: int) -> np.ndarray:
    n = free.size
    starts = rng.random(n) < rate / run
    rows = []
    for s in np.flatnonzero(starts):
        if s + run > n or not free[s:s + run].all():
            continue
        free[s:s + run] = False
        rows.extend(range(s, s + run))
    return np.asarray(rows, dtype=np.int64)


def _q(a: np.ndarray) -> list:
    return [quantize(v) for v in a.tolist()]


def generate_synthetic(config: SyntheticConfig) -> LabeledSeries:
    """Geometric random walk bars with lognormal volume and book sizes, plus
    injected anomalies labelled per record.

    Each record receives at most one anomaly; specs are applied in order and
    later ones only draw from rows still unassigned. Row 0 is never injected.
    """
    rng = np.random.default_rng(config.seed)
    n, L = config.n_records, config.levels
    sigma = config.base_volatility

    z = rng.standard_normal(n)
    wick = np.abs(rng.standard_normal((2, n)))
    vol_noise = rng.standard_normal(n)
    spread_noise = rng.standard_normal(n)
    size_noise = rng.standard_normal((2, n, L))

    kinds = np.full(n, None, dtype=object)
    free = np.ones(n, dtype=bool)
    free[0] = False
    for spec in config.anomaly_specs:
        if spec.rate == 0:
            continue
        if spec.kind == "anomalous_calm":
            rows = _pick_runs(rng, free, spec.rate, max(2, int(round(spec.magnitude))))
        else:
            rows = _pick_rows(rng, free, spec.rate)
            free[rows] = False
        kinds[rows] = spec.kind

    def rows_of(kind):
        return np.flatnonzero(kinds == kind)

    mag = {s.kind: s.magnitude for s in config.anomaly_specs}

    log_ret = sigma * z
    log_ret[0] = 0.0
    calm = rows_of("anomalous_calm")
    shock = rows_of("volatility_shock")
    log_ret[shock] *= mag.get("volatility_shock", 1.0)
    log_ret[calm] = 0.0
    close = config.base_price * np.exp(np.cumsum(log_ret))
    open_ = np.concatenate([[config.base_price], close[:-1]])
    half = 0.5 * sigma
    high = np.maximum(open_, close) * np.exp(half * wick[0])
    low = np.minimum(open_, close) * np.exp(-half * wick[1])
    high[calm] = close[calm]
    low[calm] = close[calm]
    open_[calm] = close[calm]

    volume = config.base_volume * np.exp(config.volume_dispersion * vol_noise)
    volume[rows_of("volume_spike")] *= mag.get("volume_spike", 1.0)
    volume[rows_of("volume_dust")] /= mag.get("volume_dust", 1.0)

    spread = close * config.spread_bps * 1e-4 * np.exp(0.25 * spread_noise)
    step = close * 1e-5
    lvl = np.arange(L)
    bid_px = (close - spread / 2)[:, None] - step[:, None] * lvl
    ask_px = (close + spread / 2)[:, None] + step[:, None] * lvl
    sizes = config.base_level_size * np.exp(0.5 * size_noise)
    sizes[:, rows_of("depth_withdrawal")] /= mag.get("depth_withdrawal", 1.0)
    sizes[:, rows_of("depth_inflation")] *= mag.get("depth_inflation", 1.0)

    gaps = np.full(n, BAR_MS, dtype=np.int64)
    gaps[0] = 0
    tg = rows_of("time_gap")
    gaps[tg] = int(round(BAR_MS * mag.get("time_gap", 1.0)))
    ts = config.start_ms + np.cumsum(gaps)

    cols = [_q(a) for a in (open_, high, low, close, volume)]
    bpx, apx = bid_px.tolist(), ask_px.tolist()
    bsz, asz = sizes[0].tolist(), sizes[1].tolist()
    records = [
        LobRecord(
            timestamp=int(ts[i]),
            open=cols[0][i], high=cols[1][i], low=cols[2][i], close=cols[3][i],
            volume=cols[4][i],
            bid_px=tuple(quantize(v) for v in bpx[i]),
            bid_sz=tuple(quantize(v) for v in bsz[i]),
            ask_px=tuple(quantize(v) for v in apx[i]),
            ask_sz=tuple(quantize(v) for v in asz[i]),
        )
        for i in range(n)
    ]
    labels = np.array([k is not None for k in kinds], dtype=bool)
    return LabeledSeries(records, labels, list(kinds))


def content_hash(records: Sequence[LobRecord]) -> str:
    """SHA-256 over the canonical CSV serialization of ``records``."""
    levels = records[0].levels if records else DEFAULT_LEVELS
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(csv_header(levels))
    w.writerows(_rows(records))
    return hashlib.sha256(buf.getvalue().encode()).hexdigest()
