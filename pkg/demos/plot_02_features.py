"""
From bars to a standardized feature matrix
==========================================

Spread, book imbalance, depth, inter-arrival time, two volatility measures,
Amihud illiquidity and momentum, z-scored over the full sample.
"""

import numpy as np

from lob_outliers.features import (
    FeatureParams, build_feature_matrix, compute_imbalance, compute_momentum, compute_spread,
)
from lob_outliers.market_data import SyntheticConfig, generate_synthetic

records = generate_synthetic(SyntheticConfig(n_records=3000, seed=2)).records

r = records[100]
print("spread of bar 100:", round(compute_spread(r), 4))
print("imbalance of a 150/50 book:", compute_imbalance(150, 50))
print("5-bar momentum 100 -> 103:", compute_momentum([100, 0, 0, 0, 0, 103], 5)[0])

params = FeatureParams()
fm = build_feature_matrix(records, params)
# the first rows lack a full look-back window
print("warm-up bars:", params.warmup, "-> matrix", fm.shape)
print("columns:", ", ".join(fm.col_names))
print("dropped:", fm.dropped_columns or "none")
print("max |column mean|:", np.abs(fm.values.mean(0)).max())
print("max |column std - 1|:", np.abs(fm.values.std(0) - 1).max())
