"""
Windows, lags and scaling
=========================

Synthetic gauge data is turned into 30-step input windows whose target is the
highest level over the next 24 steps.
"""

import numpy as np

from qtlstm.data import (
    add_lag_features,
    chronological_split,
    make_windows,
    normalize,
    synth_flood_series,
)

table = synth_flood_series(length=2000, seed=1)
print(table.frame.describe().round(1))

table = add_lag_features(table, "level_cm", lags=(1, 3, 5, 7))
ds = make_windows(table, "level_cm", horizon_steps=24, window=30)
print("windows:", ds.windows.shape, "features:", ds.feature_names)
print("share of targets above 100 cm: %.1f%%" % (100 * np.mean(ds.targets > 100)))

# Time-ordered split; samples near each boundary are purged so no raw row
# is shared between parts.
ds = chronological_split(ds, test_fraction=0.2, val_fraction=0.2)
print(ds.split)

ds, stats = normalize(ds)  # statistics from the training part only
x, y = ds.subset("train")
print("train range:", x.min(), x.max())
print("level column range (cm):", stats.low[ds.level_index], stats.high[ds.level_index])
