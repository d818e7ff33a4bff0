"""Command-line entry point: ``lob-outliers run`` and ``lob-outliers compare``.

``run`` writes::

    OUT/manifest.json
    OUT/summary.csv
    OUT/benchmark.json
    OUT/per_detector/<KIND>/{scores,signals,ledger,equity}.csv

``compare`` merges run directories into a ranking plus plot-ready CSVs.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .backtest import BacktestConfig, run_backtest, write_equity_csv, write_ledger_csv
from .detectors import KINDS, DetectorFailure, DetectorSpec, run_all_detectors
from .features import FeatureParams, build_feature_matrix
from .market_data import (
    ANOMALY_KINDS, AnomalySpec, SyntheticConfig, content_hash, generate_synthetic, parse_csv,
)
from .signals import build_signal_series, write_signals_csv

CONFIG_ENV = "LOB_OUTLIERS_CONFIG"
SUMMARY_COLUMNS = ("model", "long_trades", "short_trades", "cum_profit", "gain_pct",
                   "win_rate", "total_fees", "profit_per_trade")

DEFAULTS = {
    "input": None,
    "synthetic": None,
    "levels": 10,
    "detectors": "all",
    "mode": "percentile",
    "percentile": 95.0,
    "momentum_window": 5,
    "budget": 1500.0,
    "fraction": 0.3333,
    "fee_bps": 8.0,
    "apply_fees": False,
    "exit": "next_bar",
    "seed": 0,
    "out": "lob_outliers_run",
    "jobs": 1,
    "params": {},
}


class UsageError(Exception):
    def __init__(self, flag: str, message: str):
        self.flag = flag
        super().__init__(message)


def _fail(code: str, message: str, flag: str | None = None) -> None:
    parts = [f"code={code}"]
    if flag:
        parts.append(f"flag={flag}")
    parts.append("message=" + json.dumps(message))
    print("lob-outliers: error: " + " ".join(parts), file=sys.stderr)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        _fail("usage", message)
        raise SystemExit(2)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


# ---------------------------------------------------------------------------
# Parsing helpers
# ---------------------------------------------------------------------------

def parse_synthetic(spec: str, seed: int) -> SyntheticConfig:
    """``default`` or comma-separated ``key=value`` items.

    Keys: ``n``, ``seed``, ``price``, ``vol``, ``levels`` and any anomaly kind
    as ``kind=rate:magnitude``. Listing an anomaly kind replaces the default
    anomaly set with the listed ones.
    """
    spec = spec.strip()
    if spec in ("", "default"):
        return SyntheticConfig(seed=seed)
    kw: dict = {"seed": seed}
    anomalies = []
    for item in spec.split(","):
        if item.strip() == "default":
            continue
        key, sep, val = item.partition("=")
        key = key.strip()
        if not sep:
            raise UsageError("--synthetic", f"expected key=value, got {item!r}")
        try:
            if key == "n":
                kw["n_records"] = int(val)
            elif key == "seed":
                kw["seed"] = int(val)
            elif key == "price":
                kw["base_price"] = float(val)
            elif key == "vol":
                kw["base_volatility"] = float(val)
            elif key == "levels":
                kw["levels"] = int(val)
            elif key in ANOMALY_KINDS:
                rate, _, mag = val.partition(":")
                anomalies.append(AnomalySpec(key, float(rate), float(mag or 10.0)))
            elif key == "none":
                anomalies = []
                kw["anomaly_specs"] = ()
            else:
                raise UsageError("--synthetic", f"unknown synthetic key {key!r}")
        except ValueError as exc:
            raise UsageError("--synthetic", f"bad value for {key}: {exc}") from None
    if anomalies:
        kw["anomaly_specs"] = tuple(anomalies)
    try:
        return SyntheticConfig(**kw)
    except ValueError as exc:
        raise UsageError("--synthetic", str(exc)) from None


def parse_detectors(value) -> list[str]:
    if isinstance(value, str):
        if value.strip().lower() == "all":
            return list(KINDS)
        names = [v.strip() for v in value.split(",") if v.strip()]
    else:
        names = list(value)
    out = []
    for name in names:
        kind = name.upper().replace("-", "").replace("_", "")
        kind = {"ISOLATIONFOREST": "ISOF", "OCSVM": "OCSVM", "KMEANS": "KMEANS"}.get(kind, kind)
        if kind not in KINDS:
            raise UsageError("--detectors", f"unknown detector {name!r}; choose from {','.join(KINDS)}")
        if kind not in out:
            out.append(kind)
    if not out:
        raise UsageError("--detectors", "no detectors given")
    return out


def load_config(path: str | None) -> dict:
    path = path or os.environ.get(CONFIG_ENV)
    if not path:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError("--config", f"cannot read config {path}: {exc}") from None
    unknown = set(cfg) - set(DEFAULTS)
    if unknown:
        raise UsageError("--config", f"unknown config keys {sorted(unknown)}")
    return cfg


def resolve_settings(args) -> dict:
    """Merge built-in defaults, the config file and explicit flags (in that order)."""
    settings = dict(DEFAULTS)
    settings.update(load_config(args.config))
    for key in DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            settings[key] = val
    if settings["input"] and settings["synthetic"]:
        raise UsageError("--input", "give either --input or --synthetic, not both")
    if not settings["input"] and not settings["synthetic"]:
        raise UsageError("--input", "one of --input or --synthetic is required")
    return settings


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------

def _load_records(settings):
    if settings["input"]:
        records = parse_csv(settings["input"], settings["levels"])
        source = {"input": str(settings["input"])}
    else:
        cfg = parse_synthetic(settings["synthetic"], settings["seed"])
        records = generate_synthetic(cfg).records
        source = {"synthetic": asdict(cfg)}
    return records, source


def _write_scores(path, fm, sv):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["ts", "raw_score", "native_label"])
        labels = sv.native_labels
        for i, (t, s) in enumerate(zip(fm.row_timestamps.tolist(), sv.raw_scores.tolist())):
            w.writerow([t, repr(s), "" if labels is None else int(labels[i])])


def summary_row(kind: str, res) -> dict:
    return {
        "model": kind,
        "long_trades": res.long_count,
        "short_trades": res.short_count,
        "cum_profit": res.cumulative_profit,
        "gain_pct": res.gain_pct,
        "win_rate": res.win_rate,
        "total_fees": res.total_fees,
        "profit_per_trade": res.profit_per_trade,
    }


def cmd_run(args) -> int:
    settings = resolve_settings(args)
    kinds = parse_detectors(settings["detectors"])
    overrides = settings["params"] or {}
    try:
        specs = [DetectorSpec(k, dict(overrides.get(k, {})), settings["seed"]) for k in kinds]
    except ValueError as exc:
        raise UsageError("--config", str(exc)) from None
    q = float(settings["percentile"]) / 100.0
    bt = BacktestConfig(
        initial_budget=float(settings["budget"]),
        fraction=float(settings["fraction"]),
        fee_rate=float(settings["fee_bps"]) / 1e4,
        apply_fees=bool(settings["apply_fees"]),
        exit_rule=settings["exit"],
    )
    fparams = FeatureParams(momentum_window=int(settings["momentum_window"]))

    records, source = _load_records(settings)
    fm = build_feature_matrix(records, fparams)
    out = Path(settings["out"])
    (out / "per_detector").mkdir(parents=True, exist_ok=True)

    n, p = fm.shape
    manifest = {
        "tool": "lob-outliers",
        "version": __version__,
        "source": source,
        "content_hash": content_hash(records),
        "n_records": len(records),
        "feature_params": asdict(fparams),
        "feature_columns": list(fm.col_names),
        "dropped_columns": fm.dropped_columns,
        "excluded_rows": len(fm.excluded_rows),
        "detectors": [{"kind": s.kind, "seed": s.seed, "params": s.resolve(n, p)} for s in specs],
        "mode": settings["mode"],
        "percentile": float(settings["percentile"]),
        "backtest": asdict(bt),
        "seed": settings["seed"],
    }
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")

    results = run_all_detectors(fm, specs, workers=int(settings["jobs"]))
    rows, failures, bench = [], [], None
    for spec, sv in zip(specs, results):
        if isinstance(sv, DetectorFailure):
            failures.append(sv)
            continue
        ddir = out / "per_detector" / spec.kind
        ddir.mkdir(parents=True, exist_ok=True)
        try:
            ss = build_signal_series(sv, fm.momentum, fm.row_timestamps, settings["mode"], q)
            res = run_backtest(ss.signals, fm.close, bt, fm.row_timestamps)
        except Exception as exc:  # noqa: BLE001
            failures.append(DetectorFailure(spec, exc))
            continue
        _write_scores(ddir / "scores.csv", fm, sv)
        write_signals_csv(ss.signals, ddir / "signals.csv")
        write_ledger_csv(res.ledger, ddir / "ledger.csv")
        write_equity_csv(res.equity_curve, ddir / "equity.csv")
        rows.append(summary_row(spec.kind, res))
        bench = res.benchmark_profit

    write_summary(rows, out / "summary.csv")
    with open(out / "benchmark.json", "w", encoding="utf-8") as fh:
        json.dump({"buy_and_hold_profit": bench, "initial_budget": bt.initial_budget},
                  fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(format_table(rows))
    if failures:
        for f in failures:
            _fail("detector", str(f))
        return 1
    return 0


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def write_summary(rows, path, columns=SUMMARY_COLUMNS):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in columns])


def read_summary(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != SUMMARY_COLUMNS:
            raise ValueError(f"{path}: summary columns do not match the expected schema")
        rows = []
        for r in reader:
            row = {"model": r["model"]}
            for c in SUMMARY_COLUMNS[1:]:
                v = r[c]
                row[c] = None if v == "" else (int(v) if c.endswith("trades") else float(v))
            rows.append(row)
    return rows


def format_table(rows) -> str:
    runs = [Path(r["run"]).name for r in rows if "run" in r]
    width = max([len(x) for x in runs] + [3]) + 2
    head = f"{'model':<8}{'long':>7}{'short':>7}{'profit':>12}{'gain%':>9}{'WR%':>8}{'fees':>10}{'P/trade':>10}"
    lines = [(f"{'run':<{width}}" if runs else "") + head]
    for r in rows:
        wr = "-" if r["win_rate"] is None else f"{r['win_rate']:.2f}"
        ppt = "-" if r["profit_per_trade"] is None else f"{r['profit_per_trade']:.4f}"
        lead = f"{Path(r['run']).name:<{width}}" if "run" in r else ""
        lines.append(f"{lead}{r['model']:<8}{r['long_trades']:>7}{r['short_trades']:>7}"
                     f"{r['cum_profit']:>12.2f}{r['gain_pct']:>9.2f}{wr:>8}"
                     f"{r['total_fees']:>10.2f}{ppt:>10}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# compare
# ---------------------------------------------------------------------------

def cmd_compare(args) -> int:
    seen = {}
    merged = []
    equity_rows, bench_rows = [], []
    for d in args.run_dirs:
        d = Path(d)
        man_path, sum_path = d / "manifest.json", d / "summary.csv"
        if not man_path.is_file() or not sum_path.is_file():
            raise UsageError("run_dirs", f"{d} is not a completed run directory")
        digest = hashlib.sha256(man_path.read_bytes()).hexdigest()
        try:
            rows = read_summary(sum_path)
        except ValueError as exc:
            raise UsageError("run_dirs", str(exc)) from None
        if digest in seen:
            print(f"lob-outliers: warning: {d} repeats the manifest of {seen[digest]}; "
                  "its rows are deduplicated", file=sys.stderr)
            continue
        seen[digest] = str(d)
        for r in rows:
            merged.append({"run": str(d), **r})
            eq = d / "per_detector" / r["model"] / "equity.csv"
            if eq.is_file():
                with open(eq, newline="", encoding="utf-8") as fh:
                    for e in csv.DictReader(fh):
                        equity_rows.append([str(d), r["model"], e["ts"], e["budget"]])
        bj = d / "benchmark.json"
        if bj.is_file():
            bench_rows.append([str(d), _fmt(json.loads(bj.read_text())["buy_and_hold_profit"])])

    merged.sort(key=lambda r: -r["gain_pct"])
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_summary(merged, out / "comparison.csv", ("run", *SUMMARY_COLUMNS))
    write_summary(merged, out / "profit_per_trade.csv", ("run", "model", "profit_per_trade"))
    write_summary(merged, out / "fees.csv", ("run", "model", "total_fees", "long_trades",
                                             "short_trades"))
    with open(out / "equity_curves.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["run", "model", "ts", "budget"])
        w.writerows(equity_rows)
    with open(out / "benchmark.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["run", "buy_and_hold_profit"])
        w.writerows(bench_rows)
    print(format_table(merged))
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="lob-outliers", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="score, signal and backtest one data set")
    src = run.add_mutually_exclusive_group()
    src.add_argument("--input", metavar="PATH", help="bar/book CSV file")
    src.add_argument("--synthetic", metavar="SPEC",
                     help="'default' or key=value list, e.g. n=10000,seed=3,volume_spike=0.02:20")
    D = DEFAULTS
    run.add_argument("--levels", type=int, help=f"book depth levels in the CSV (default {D['levels']})")
    run.add_argument("--detectors", metavar="LIST",
                     help=f"comma-separated kinds or 'all' (default all: {','.join(KINDS)})")
    run.add_argument("--mode", choices=("percentile", "native"),
                     help=f"flagging mode (default {D['mode']})")
    run.add_argument("--percentile", type=float, metavar="Q",
                     help=f"threshold percentile (default {D['percentile']:g})")
    run.add_argument("--momentum-window", type=int, metavar="N",
                     help=f"momentum look-back in bars (default {D['momentum_window']})")
    run.add_argument("--budget", type=float, metavar="X",
                     help=f"initial budget (default {D['budget']:g})")
    run.add_argument("--fraction", type=float, metavar="F",
                     help=f"fraction of budget per trade (default {D['fraction']})")
    run.add_argument("--fee-bps", type=float, metavar="N",
                     help=f"fee per trade in basis points (default {D['fee_bps']:g})")
    run.add_argument("--apply-fees", action="store_true", default=None,
                     help="deduct fees from the budget (default off)")
    run.add_argument("--exit", choices=("next_bar", "next_signal"),
                     help=f"exit rule (default {D['exit']})")
    run.add_argument("--seed", type=int, metavar="N", help=f"random seed (default {D['seed']})")
    run.add_argument("--out", metavar="DIR", help=f"output directory (default {D['out']})")
    run.add_argument("--jobs", type=int, metavar="N",
                     help=f"detectors fitted concurrently (default {D['jobs']})")
    run.add_argument("--config", metavar="FILE",
                     help=f"JSON config file; falls back to ${CONFIG_ENV} (default none)")
    run.set_defaults(func=cmd_run)

    cmp_ = sub.add_parser("compare", help="merge completed run directories")
    cmp_.add_argument("run_dirs", nargs="+", metavar="RUN_DIR")
    cmp_.add_argument("--out", default="lob_outliers_compare", metavar="DIR",
                      help="output directory (default lob_outliers_compare)")
    cmp_.set_defaults(func=cmd_compare)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        _fail("usage", str(exc), exc.flag)
        return 2
    except Exception as exc:  # noqa: BLE001 - single-line report for any module failure
        _fail(type(exc).__name__, str(exc))
        return 1


if __name__ == "__main__":
    sys.exit(main())
