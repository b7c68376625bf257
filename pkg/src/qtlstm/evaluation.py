"""Regression metrics and threshold-based flood-warning classification."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

DEFAULT_THRESHOLD_CM = 100.0


@dataclass(frozen=True)
class RegressionMetrics:
    mse: float
    mae: float
    n_samples: int


@dataclass(frozen=True)
class WarningReport:
    """Share of samples, in percent, falling in each warning outcome.

    A warning is issued when the level is strictly above ``threshold_cm``.
    """

    true_warning_pct: float
    false_alert_pct: float
    missed_warning_pct: float
    correct_no_warning_pct: float
    threshold_cm: float = DEFAULT_THRESHOLD_CM
    n_samples: int = 0

    def as_dict(self) -> dict:
        return asdict(self)

    @property
    def total_pct(self) -> float:
        return self.true_warning_pct + self.false_alert_pct + self.missed_warning_pct + self.correct_no_warning_pct


def _pair(preds, actuals) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(preds, dtype=float).reshape(-1)
    a = np.asarray(actuals, dtype=float).reshape(-1)
    if p.shape != a.shape:
        raise ValueError(f"length mismatch: {p.size} predictions vs {a.size} actuals")
    if p.size == 0:
        raise ValueError("no samples to evaluate")
    return p, a


def evaluate_regression(preds, actuals) -> RegressionMetrics:
    p, a = _pair(preds, actuals)
    err = a - p
    return RegressionMetrics(float(np.mean(err**2)), float(np.mean(np.abs(err))), int(p.size))


def classify_warnings(preds, actuals, threshold: float = DEFAULT_THRESHOLD_CM) -> WarningReport:
    p, a = _pair(preds, actuals)
    pw, aw = p > threshold, a > threshold
    counts = np.array([np.sum(pw & aw), np.sum(pw & ~aw), np.sum(~pw & aw), np.sum(~pw & ~aw)])
    pct = 100.0 * counts / p.size
    return WarningReport(*map(float, pct), threshold_cm=float(threshold), n_samples=int(p.size))
