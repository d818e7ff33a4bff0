"""Sequential fixed-fraction backtest of trade signals, with a Buy-and-Hold
benchmark and fee accounting.

Each executed trade commits ``fraction`` of the current budget at the close of
the signal bar and is closed at the next bar's close (or at the next signal's
bar). One position is open at a time.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

DAY_MS = 86_400_000
EXIT_RULES = ("next_bar", "next_signal")


class BacktestError(ValueError):
    pass


@dataclass(frozen=True)
class BacktestConfig:
    initial_budget: float = 1500.0
    fraction: float = 0.3333
    fee_rate: float = 0.0008
    apply_fees: bool = False
    exit_rule: str = "next_bar"

    def __post_init__(self):
        if not self.initial_budget > 0:
            raise BacktestError("initial budget must be positive")
        if not 0 <= self.fraction <= 1:
            raise BacktestError("fraction must lie in [0, 1]")
        if not self.fee_rate >= 0:
            raise BacktestError("fee rate must be non-negative")
        if self.exit_rule not in EXIT_RULES:
            raise BacktestError(f"exit_rule must be one of {EXIT_RULES}")


@dataclass(frozen=True)
class TradeLedgerEntry:
    entry_ts: int
    exit_ts: int
    direction: str
    amount: float
    entry_price: float
    exit_price: float
    price_change: float
    profit: float
    fee: float
    budget_after: float
    cum_profit: float
    trade_return: float


@dataclass
class BacktestResult:
    ledger: list[TradeLedgerEntry]
    equity_curve: list[tuple[int, float]]
    initial_budget: float
    cumulative_profit: float
    gain_pct: float
    win_rate: float | None
    long_count: int
    short_count: int
    total_fees: float
    profit_per_trade: float | None
    benchmark_profit: float | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def final_budget(self) -> float:
        return self.equity_curve[-1][1]

    @property
    def n_trades(self) -> int:
        return len(self.ledger)


def signed_return(direction: str, entry: float, exit: float) -> float:
    """Fractional gain of a position: short gains when the price falls."""
    if direction == "short":
        return (entry - exit) / entry
    if direction == "long":
        return (exit - entry) / entry
    raise BacktestError(f"unknown direction {direction!r}")


def run_backtest(signals, closes, config: BacktestConfig = BacktestConfig(),
                 timestamps=None) -> BacktestResult:
    """Replay ``signals`` against the aligned close series.

    ``signal.index`` locates the signal bar in ``closes``. Signals arriving
    while a position is still open are skipped; signals without an exit bar
    are dropped; both are counted in ``diagnostics``. The run halts if the
    budget reaches zero.
    """
    closes = np.asarray(closes, dtype=float)
    n = closes.size
    ts = np.arange(n) if timestamps is None else np.asarray(timestamps)
    if ts.size != n:
        raise BacktestError("timestamps and closes differ in length")
    idx = [s.index for s in signals]
    if any(b < a for a, b in zip(idx, idx[1:])):
        raise BacktestError("signals must be sorted by time")
    if any(not 0 <= i < n for i in idx):
        raise BacktestError("signal index outside the close series")

    B0 = config.initial_budget
    budget = B0
    ledger = []
    equity = [(int(ts[0]) if n else 0, B0)]
    skipped = dropped = 0
    ruined = False
    busy_until = -1
    for k, sig in enumerate(signals):
        i = sig.index
        if config.exit_rule == "next_bar":
            exit_i = i + 1 if i + 1 < n else None
        else:
            exit_i = next((s.index for s in signals[k + 1:] if s.index > i), None)
        if exit_i is None:
            dropped += 1
            continue
        if i < busy_until:
            skipped += 1
            continue
        if budget <= 0:
            ruined = True
            break
        amount = config.fraction * budget
        entry, exit_ = float(closes[i]), float(closes[exit_i])
        change = signed_return(sig.direction, entry, exit_)
        profit = amount * change
        fee = amount * config.fee_rate
        budget = budget + profit - (fee if config.apply_fees else 0.0)
        ledger.append(TradeLedgerEntry(
            entry_ts=int(ts[i]), exit_ts=int(ts[exit_i]), direction=sig.direction,
            amount=amount, entry_price=float(entry), exit_price=float(exit_),
            price_change=change, profit=profit, fee=fee, budget_after=budget,
            cum_profit=budget - B0, trade_return=profit / B0,
        ))
        equity.append((int(ts[exit_i]), budget))
        busy_until = exit_i
    if budget <= 0:
        ruined = True

    P = budget - B0
    longs = sum(e.direction == "long" for e in ledger)
    total_fees, _ = fee_report(ledger, config.fee_rate)
    bench = None
    if timestamps is not None:
        days = daily_closes(ts, closes)
        if days.size >= 2:
            bench = buy_and_hold(days, B0)
    return BacktestResult(
        ledger=ledger,
        equity_curve=equity,
        initial_budget=B0,
        cumulative_profit=P,
        gain_pct=P / B0 * 100.0,
        win_rate=win_rate(ledger),
        long_count=longs,
        short_count=len(ledger) - longs,
        total_fees=total_fees,
        profit_per_trade=profit_per_trade(P, len(ledger)) if ledger else None,
        benchmark_profit=bench,
        diagnostics={"skipped_overlap": skipped, "dropped_no_exit": dropped,
                     "ruined": ruined},
    )


def daily_closes(timestamps, closes) -> np.ndarray:
    """Reference prices for daily returns: the first close, then the last close
    of every UTC calendar day."""
    ts = np.asarray(timestamps, dtype=np.int64)
    closes = np.asarray(closes, dtype=float)
    if ts.size == 0:
        return closes
    day = ts // DAY_MS
    last = np.flatnonzero(np.r_[day[1:] != day[:-1], True])
    return np.r_[closes[0], closes[last]]


def buy_and_hold(daily, initial_budget: float) -> float:
    """``B0 * (1 + sum of simple daily returns) - B0`` (returns are not compounded)."""
    daily = np.asarray(daily, dtype=float)
    if daily.size < 2:
        raise BacktestError("buy-and-hold needs at least two daily closes")
    dr = np.diff(daily) / daily[:-1]
    return initial_budget * (1.0 + dr.sum()) - initial_budget


def win_rate(ledger: Sequence[TradeLedgerEntry]) -> float | None:
    """Percentage of trades with positive profit; ``None`` for an empty ledger."""
    if not ledger:
        return None
    wins = sum(e.profit > 0 for e in ledger)
    return wins / len(ledger) * 100.0


def fee_report(ledger: Sequence[TradeLedgerEntry], fee_rate: float):
    """Fee per trade (``amount * fee_rate``) and their total."""
    if fee_rate < 0:
        raise BacktestError("fee rate must be non-negative")
    per = [e.amount * fee_rate for e in ledger]
    return math.fsum(per), per


def profit_per_trade(cum_profit: float, n_trades: int) -> float:
    if n_trades <= 0:
        raise BacktestError("profit per trade needs at least one trade")
    return cum_profit / n_trades


LEDGER_COLUMNS = ("entry_ts", "exit_ts", "direction", "amount", "entry_price",
                  "exit_price", "profit", "fee", "budget_after")


def write_ledger_csv(ledger: Sequence[TradeLedgerEntry], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(LEDGER_COLUMNS)
        for e in ledger:
            w.writerow([e.entry_ts, e.exit_ts, e.direction]
                       + [repr(getattr(e, c)) for c in LEDGER_COLUMNS[3:]])


def write_equity_csv(equity: Sequence[tuple[int, float]], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["ts", "budget"])
        for t, b in equity:
            w.writerow([t, repr(b)])
