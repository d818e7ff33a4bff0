"""
Signals and a fixed-fraction backtest
=====================================

Scores are min-max scaled, bars above the 95th percentile are flagged, and
each flagged bar trades against its recent momentum. A third of the budget
goes into every trade, closed at the next bar.
"""

from lob_outliers.backtest import BacktestConfig, fee_report, run_backtest
from lob_outliers.detectors import DetectorSpec, score
from lob_outliers.features import build_feature_matrix
from lob_outliers.market_data import SyntheticConfig, generate_synthetic
from lob_outliers.signals import TradeSignal, build_signal_series

# a single short, worked by hand: 1500 * 0.3333 = 499.95 committed, price
# falls 1%, profit 4.9995
one = run_backtest([TradeSignal(0, "short", 1.0, 0.02, 0)], [100.0, 99.0])
e = one.ledger[0]
print("amount", e.amount, "profit", round(e.profit, 10), "budget", round(one.final_budget, 10))

# the full chain on synthetic data (about three days of bars)
fm = build_feature_matrix(generate_synthetic(SyntheticConfig(n_records=4000, seed=4)).records)
sv = score(fm, DetectorSpec("EC"))
ss = build_signal_series(sv, fm.momentum, fm.row_timestamps, mode="percentile", q=0.95)
print(f"\nthreshold {ss.threshold:.4f}: {int(ss.flags.sum())} flags, {len(ss.signals)} signals")

for cfg in (BacktestConfig(), BacktestConfig(apply_fees=True)):
    r = run_backtest(ss.signals, fm.close, cfg, fm.row_timestamps)
    print(f"fees {'applied' if cfg.apply_fees else 'ignored'}: profit {r.cumulative_profit:8.2f} "
          f"({r.gain_pct:+.2f}%), win rate {r.win_rate:.1f}%, {r.long_count} long / "
          f"{r.short_count} short, fees {r.total_fees:.2f}")
print(f"buy-and-hold over the same days: {r.benchmark_profit:+.2f}")

total, per_trade = fee_report(r.ledger, 0.0008)
print("first fee:", round(per_trade[0], 6), "of amount", round(r.ledger[0].amount, 4))
