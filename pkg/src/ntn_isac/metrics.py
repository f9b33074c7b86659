"""Reductions over run logs: empirical CDFs, detection scores, tracking error."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np


@dataclass(frozen=True)
class CdfSeries:
    values: np.ndarray
    probs: np.ndarray

    def quantile(self, q: float) -> float:
        """Linearly interpolated quantile of the underlying sample."""
        return float(np.quantile(self.values, q))

    @property
    def median(self) -> float:
        return self.quantile(0.5)


def empirical_cdf(values) -> CdfSeries:
    v = np.sort(np.asarray(values, float).ravel())
    if v.size == 0:
        raise ValueError("empirical CDF of an empty sample")
    return CdfSeries(v, np.arange(1, v.size + 1) / v.size)


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int = 0
    fn: int = 0
    fp: int = 0
    tn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fn + self.fp + self.tn

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(self.tp + other.tp, self.fn + other.fn,
                               self.fp + other.fp, self.tn + other.tn)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ClassificationScores:
    """Scores with ``None`` wherever the ratio is 0/0."""

    accuracy: float | None
    precision: float | None
    recall: float | None
    f1: float | None

    def to_dict(self) -> dict:
        return asdict(self)


def confusion(decisions) -> ConfusionMatrix:
    tp = fn = fp = tn = 0
    for d in decisions:
        if d.truth:
            if d.predicted:
                tp += 1
            else:
                fn += 1
        elif d.predicted:
            fp += 1
        else:
            tn += 1
    return ConfusionMatrix(tp, fn, fp, tn)


def _ratio(num: float, den: float) -> float | None:
    return num / den if den else None


def scores(cm: ConfusionMatrix) -> ClassificationScores:
    accuracy = _ratio(cm.tp + cm.tn, cm.total)
    precision = _ratio(cm.tp, cm.tp + cm.fp)
    recall = _ratio(cm.tp, cm.tp + cm.fn)
    f1 = None
    if precision is not None and recall is not None:
        f1 = _ratio(2.0 * precision * recall, precision + recall)
    return ClassificationScores(accuracy, precision, recall, f1)


@dataclass(frozen=True)
class TrackingError:
    speed_rmse: float | None
    distance_rmse: float | None
    speed_residuals: np.ndarray
    distance_residuals: np.ndarray


def _residuals(est, true) -> np.ndarray:
    est = np.asarray(est, float)
    true = np.asarray(true, float)
    if est.shape != true.shape:
        raise ValueError(f"series length mismatch: {est.shape} vs {true.shape}")
    if est.size == 0:
        raise ValueError("empty series")
    return est - true


def rmse(residuals) -> float | None:
    """Root-mean-square over the finite entries (NaN marks skipped slots)."""
    r = np.asarray(residuals, float)
    r = r[np.isfinite(r)]
    return float(math.sqrt(np.mean(r ** 2))) if r.size else None


def tracking_error(est_speed, true_speed, est_distance=None, true_distance=None) -> TrackingError:
    sr = _residuals(est_speed, true_speed)
    if est_distance is None:
        dr = np.empty(0)
    else:
        dr = _residuals(est_distance, true_distance)
    return TrackingError(rmse(sr), rmse(dr) if dr.size else None, sr, dr)
