"""Time-series ingestion, lag features, windowing, scaling and synthetic data."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd

from .errors import DataError, SchemaError

log = logging.getLogger(__name__)

DEFAULT_LAGS = (1, 3, 5, 7)


@dataclass
class Schema:
    """Which CSV columns matter.

    ``feature_columns=None`` means every non-timestamp column. The level
    column is always part of the features.
    """

    level_column: str = "level_cm"
    feature_columns: list[str] | None = None


@dataclass
class SeriesTable:
    timestamps: np.ndarray
    frame: pd.DataFrame
    missing: dict[str, int] = field(default_factory=dict)
    usable_from: int = 0  # rows before this index hold incomplete lag values

    def __post_init__(self):
        self.timestamps = np.asarray(self.timestamps)
        if len(self.timestamps) != len(self.frame):
            raise DataError("timestamp count does not match row count")
        if len(self.timestamps) > 1 and not np.all(self.timestamps[1:] > self.timestamps[:-1]):
            raise DataError("timestamps must be strictly increasing")
        self.frame = self.frame.reset_index(drop=True)

    def __len__(self):
        return len(self.frame)

    @property
    def columns(self) -> list[str]:
        return list(self.frame.columns)

    def column(self, name: str) -> np.ndarray:
        if name not in self.frame.columns:
            raise SchemaError(f"column {name!r} not in table (have {self.columns})")
        return self.frame[name].to_numpy(dtype=float)


# -- CSV -------------------------------------------------------------------


def _parse_timestamps(raw: pd.Series) -> np.ndarray:
    as_int = pd.to_numeric(raw, errors="coerce")
    if as_int.notna().all() and (as_int == as_int.round()).all():
        return as_int.to_numpy(dtype=np.int64)
    try:
        return pd.to_datetime(raw, format="ISO8601").to_numpy()
    except (ValueError, TypeError) as exc:
        raise DataError(f"unparseable timestamps: {exc}") from None


def _to_float(col: pd.Series) -> pd.Series:
    # numpy's str -> float conversion is correctly rounded; pd.to_numeric is not
    text = col.str.strip()
    ok = pd.to_numeric(text, errors="coerce").notna()
    out = np.full(len(col), np.nan)
    out[ok.to_numpy()] = text[ok].to_numpy().astype(float)
    return pd.Series(out, index=col.index, name=col.name)


def load_csv(path, schema: Schema | None = None) -> SeriesTable:
    """Read a CSV whose first column is a timestamp (ISO-8601 or integer).

    Blank or non-numeric cells become NaN and are counted per column in
    ``table.missing``; call :func:`fill_missing` before windowing.
    """
    path = Path(path)
    schema = schema or Schema()
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False)
    except FileNotFoundError:
        raise
    except pd.errors.EmptyDataError:
        raise DataError(f"{path}: empty file") from None
    if df.shape[1] < 2:
        raise DataError(f"{path}: need a timestamp column plus at least one series")
    if len(df) == 0:
        raise DataError(f"{path}: no data rows")

    ts_col = df.columns[0]
    wanted = [schema.level_column] + [c for c in (schema.feature_columns or []) if c != schema.level_column]
    absent = [c for c in wanted if c not in df.columns]
    if absent:
        raise SchemaError(f"{path}: missing column(s) {absent}")

    values = df.drop(columns=[ts_col]).apply(_to_float)
    missing = {c: int(n) for c, n in values.isna().sum().items() if n}
    if missing:
        log.info("%s: %d unparseable or blank cells flagged", path, sum(missing.values()))
    return SeriesTable(_parse_timestamps(df[ts_col]), values, missing)


def write_csv(table: SeriesTable, path, timestamp_name: str = "timestamp") -> None:
    ts = table.timestamps
    if np.issubdtype(ts.dtype, np.datetime64):
        ts = pd.DatetimeIndex(ts).strftime("%Y-%m-%dT%H:%M:%S")
    out = table.frame.copy()
    out.insert(0, timestamp_name, ts)
    out.to_csv(path, index=False, lineterminator="\n")


def fill_missing(table: SeriesTable) -> SeriesTable:
    """Forward-fill then back-fill gaps; logs how many cells were filled."""
    n = int(table.frame.isna().sum().sum())
    if n:
        log.info("filling %d missing values (ffill, then bfill)", n)
    frame = table.frame.ffill().bfill()
    return replace(table, frame=frame, missing={})


# -- features --------------------------------------------------------------


def lag_name(column: str, lag: int) -> str:
    return f"{column}_lag{lag}"


def add_lag_features(table: SeriesTable, target_column: str, lags: Sequence[int] = DEFAULT_LAGS) -> SeriesTable:
    """Append ``target_column`` shifted by each lag; leading rows become NaN."""
    lags = [int(k) for k in lags]
    if not lags:
        raise ValueError("at least one lag is required")
    if min(lags) < 1:
        raise ValueError("lags must be >= 1")
    if max(lags) >= len(table):
        raise ValueError(f"lag {max(lags)} too long for a {len(table)}-row table")
    src = table.frame[target_column] if target_column in table.frame else None
    if src is None:
        raise SchemaError(f"column {target_column!r} not in table")
    frame = table.frame.copy()
    for k in lags:
        frame[lag_name(target_column, k)] = src.shift(k)
    return replace(table, frame=frame, usable_from=max(table.usable_from, max(lags)))


# -- windows ---------------------------------------------------------------


@dataclass
class MinMaxStats:
    columns: list[str]
    low: np.ndarray
    high: np.ndarray

    @property
    def constant(self) -> np.ndarray:
        return self.high == self.low

    def _span(self) -> np.ndarray:
        return np.where(self.constant, 1.0, self.high - self.low)

    def scale(self, values: np.ndarray) -> np.ndarray:
        """Scale the trailing axis (one entry per column); constant columns go to 0."""
        out = (np.asarray(values, dtype=float) - self.low) / self._span()
        return np.where(self.constant, 0.0, out)

    def unscale(self, values: np.ndarray) -> np.ndarray:
        return np.asarray(values, dtype=float) * self._span() + self.low

    def scale_column(self, values, column: str) -> np.ndarray:
        j = self.columns.index(column)
        if self.constant[j]:
            return np.zeros_like(np.asarray(values, dtype=float))
        return (np.asarray(values, dtype=float) - self.low[j]) / (self.high[j] - self.low[j])

    def unscale_column(self, values, column: str) -> np.ndarray:
        j = self.columns.index(column)
        return np.asarray(values, dtype=float) * self._span()[j] + self.low[j]

    def to_dict(self) -> dict:
        return {"columns": list(self.columns), "low": self.low.tolist(), "high": self.high.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "MinMaxStats":
        return cls(list(d["columns"]), np.asarray(d["low"], dtype=float), np.asarray(d["high"], dtype=float))


@dataclass
class Split:
    """Chronological sample ranges; ``gap`` samples are purged at each boundary."""

    train: slice
    val: slice
    test: slice

    def get(self, name: str) -> slice:
        if name == "all":
            return slice(None)
        return getattr(self, name)


@dataclass
class WindowedDataset:
    windows: np.ndarray  # (S, window, F)
    targets: np.ndarray  # (S,) max level over the horizon
    feature_names: list[str]
    level_column: str
    timestamps: np.ndarray  # (S,) timestamp of the last input row
    start_rows: np.ndarray  # (S,) table row of the first input step
    window: int
    horizon_steps: int
    stats: MinMaxStats | None = None
    split: Split | None = None

    def __len__(self):
        return len(self.targets)

    @property
    def level_index(self) -> int:
        return self.feature_names.index(self.level_column)

    def subset(self, part: str) -> tuple[np.ndarray, np.ndarray]:
        sl = self.split.get(part) if self.split is not None else slice(None)
        return self.windows[sl], self.targets[sl]

    def last_level(self, part: str = "all") -> np.ndarray:
        """Most recent observed level in each window (the persistence forecast)."""
        sl = self.split.get(part) if self.split is not None else slice(None)
        return self.windows[sl, -1, self.level_index]


def make_windows(
    table: SeriesTable,
    level_column: str,
    horizon_steps: int,
    window: int = 30,
    feature_columns: Sequence[str] | None = None,
) -> WindowedDataset:
    """Sample ``s`` reads rows ``[s, s+window)`` and targets the max level over
    ``[s+window, s+window+horizon_steps)``. Rows before ``table.usable_from`` are
    skipped.
    """
    if window < 1 or horizon_steps < 1:
        raise ValueError("window and horizon_steps must be >= 1")
    features = list(feature_columns) if feature_columns is not None else table.columns
    if level_column not in features:
        features = [level_column] + features
    for c in features:
        if c not in table.frame.columns:
            raise SchemaError(f"column {c!r} not in table")

    start = table.usable_from
    data = table.frame[features].to_numpy(dtype=float)[start:]
    level = table.column(level_column)[start:]
    n = len(data)
    if n < window + horizon_steps:
        raise DataError(f"{n} usable rows, need at least window + horizon_steps = {window + horizon_steps}")
    if not np.all(np.isfinite(data)):
        raise DataError("table has missing or non-finite values; run fill_missing first")

    S = n - window - horizon_steps + 1
    windows = np.lib.stride_tricks.sliding_window_view(data, window, axis=0)[:S].transpose(0, 2, 1).copy()
    future = np.lib.stride_tricks.sliding_window_view(level[window:], horizon_steps)[:S]
    rows = np.arange(S) + start
    return WindowedDataset(
        windows=windows,
        targets=future.max(axis=1),
        feature_names=features,
        level_column=level_column,
        timestamps=table.timestamps[rows + window - 1],
        start_rows=rows,
        window=window,
        horizon_steps=horizon_steps,
    )


def chronological_split(dataset: WindowedDataset, test_fraction: float = 0.2, val_fraction: float = 0.2) -> WindowedDataset:
    """Attach train/validation/test ranges in time order.

    The test block is the last ``test_fraction`` of samples; validation is the
    last ``val_fraction`` of what precedes it. ``window + horizon_steps``
    samples are dropped at each boundary so no raw row is shared across parts.
    """
    S = len(dataset)
    gap = dataset.window + dataset.horizon_steps
    n_test = int(round(test_fraction * S))
    dev_end = S - n_test - (gap if n_test else 0)
    n_val = int(round(val_fraction * dev_end))
    train_end = dev_end - n_val - (gap if n_val else 0)
    if train_end < 1 or (n_test and dev_end <= 0):
        raise DataError(f"{S} samples are too few to split with a {gap}-sample purge gap")
    split = Split(slice(0, train_end), slice(dev_end - n_val, dev_end), slice(S - n_test, S))
    return replace(dataset, split=split)


def fit_stats(dataset: WindowedDataset) -> MinMaxStats:
    """Per-feature min/max over the training samples (inputs and targets)."""
    sl = dataset.split.train if dataset.split is not None else slice(None)
    w = dataset.windows[sl]
    low = w.min(axis=(0, 1))
    high = w.max(axis=(0, 1))
    j = dataset.level_index
    t = dataset.targets[sl]
    low[j] = min(low[j], t.min())
    high[j] = max(high[j], t.max())
    return MinMaxStats(list(dataset.feature_names), low, high)


def normalize(dataset: WindowedDataset, stats: MinMaxStats | None = None) -> tuple[WindowedDataset, MinMaxStats]:
    """Min-max scale every feature and the target (with the level column's range).

    Statistics come from the training split unless ``stats`` is given. Constant
    columns map to 0 and are logged.
    """
    if dataset.stats is not None:
        raise ValueError("dataset is already normalized")
    stats = stats or fit_stats(dataset)
    if stats.columns != dataset.feature_names:
        raise SchemaError(f"statistics cover {stats.columns}, dataset has {dataset.feature_names}")
    if stats.constant.any():
        log.warning("constant columns mapped to 0: %s", [c for c, k in zip(stats.columns, stats.constant) if k])
    out = replace(
        dataset,
        windows=stats.scale(dataset.windows),
        targets=stats.scale_column(dataset.targets, dataset.level_column),
        stats=stats,
    )
    return out, stats


def denormalize(values, stats: MinMaxStats, column: str) -> np.ndarray:
    return stats.unscale_column(values, column)


def prepare_dataset(
    table: SeriesTable,
    level_column: str,
    horizon_steps: int,
    window: int = 30,
    lags: Sequence[int] = DEFAULT_LAGS,
    feature_columns: Sequence[str] | None = None,
    test_fraction: float = 0.2,
    val_fraction: float = 0.2,
    stats: MinMaxStats | None = None,
) -> WindowedDataset:
    """fill -> lags -> windows -> split -> normalize, in that order."""
    table = fill_missing(table)
    base = list(feature_columns) if feature_columns is not None else table.columns
    if lags:
        table = add_lag_features(table, level_column, lags)
        base = base + [lag_name(level_column, k) for k in lags]
    ds = make_windows(table, level_column, horizon_steps, window, base)
    ds = chronological_split(ds, test_fraction, val_fraction)
    ds, _ = normalize(ds, stats)
    return ds


# -- synthetic data --------------------------------------------------------


def synth_flood_series(
    length: int = 2000,
    seed: int = 0,
    spike_rate: float = 0.008,
    noise: float = 1.5,
    baseline: float = 55.0,
    seasonal_amplitude: float = 12.0,
    period: int = 720,
) -> SeriesTable:
    """Hourly river-gauge-like series with rain-driven flood spikes.

    Columns: ``level_cm`` (baseline + sinusoid + AR(1) noise + spikes),
    ``discharge_m3s`` (rating curve of the level), ``rainfall_mm`` (falls a few
    hours before each spike rises) and ``reservoir_fill_pct``. Timestamps are
    integer hours.
    """
    if length < 200:
        raise ValueError("length must be >= 200")
    rng = np.random.default_rng(seed)
    t = np.arange(length)
    level = baseline + seasonal_amplitude * np.sin(2 * np.pi * t / period)

    ar = np.zeros(length)
    eps = rng.standard_normal(length) * noise
    for k in range(1, length):
        ar[k] = 0.9 * ar[k - 1] + eps[k]

    rain = np.zeros(length)
    spikes = np.zeros(length)
    onsets = np.flatnonzero(rng.random(length) < spike_rate)
    for t0 in onsets:
        height = 20.0 + rng.exponential(30.0)
        tau = rng.uniform(8.0, 20.0)
        dur = int(rng.integers(2, 6))
        rain[t0 : t0 + dur] += height / (3.0 * dur) * rng.uniform(0.8, 1.2, size=len(rain[t0 : t0 + dur]))
        # level starts rising 3 h after the rain onset, peaks after 4 h more
        k = np.arange(length - t0 - 3)
        shape = np.where(k < 4, k / 4.0, np.exp(-(k - 4) / tau))
        spikes[t0 + 3 :] += height * shape

    level = level + ar + spikes
    rain_obs = rain + (noise > 0) * rng.exponential(0.05, size=length) * (rng.random(length) < 0.1)
    discharge = 0.02 * np.clip(level, 1.0, None) ** 1.5 + 0.1 * noise * rng.standard_normal(length)
    fill = np.empty(length)
    fill[0] = 60.0
    for k in range(1, length):
        fill[k] = np.clip(fill[k - 1] + 0.01 * (60.0 - fill[k - 1]) + 0.4 * rain_obs[k], 0.0, 100.0)

    frame = pd.DataFrame(
        {"level_cm": level, "discharge_m3s": discharge, "rainfall_mm": rain_obs, "reservoir_fill_pct": fill}
    )
    return SeriesTable(t.astype(np.int64), frame)
