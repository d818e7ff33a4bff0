"""Order-book outlier detection, mean-reversion signals and backtesting."""

__version__ = "0.1.0"

from .backtest import BacktestConfig, BacktestResult, run_backtest
from .detectors import KINDS, DetectorSpec, ScoreVector, default_specs, run_all_detectors, score
from .features import FeatureMatrix, FeatureParams, build_feature_matrix
from .market_data import LobRecord, SyntheticConfig, generate_synthetic, parse_csv, write_csv
from .signals import TradeSignal, build_signal_series

__all__ = [
    "BacktestConfig", "BacktestResult", "DetectorSpec", "FeatureMatrix", "FeatureParams",
    "KINDS", "LobRecord", "ScoreVector", "SyntheticConfig", "TradeSignal", "__version__",
    "build_feature_matrix", "build_signal_series", "default_specs", "generate_synthetic",
    "parse_csv", "run_all_detectors", "run_backtest", "score", "write_csv",
]
