"""Scalar regression metrics, per-channel-group aggregation, and the
spatial-resolution accuracy curve.

MAE, R^2 and sMAPE follow the usual definitions; sMAPE normalizes each
absolute error by the mean magnitude of truth and prediction (with a 1e-8
guard) and is returned as a percentage in [0, 200].
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import (
    CHANNEL_GROUPS,
    LABEL_CHANNELS,
    NormParams,
    SensorDataset,
    fit_minmax,
    normalize,
)
from .errors import EmptyPairs, MissingPrediction, OffLattice, SchemaError, ZeroVariance

SMAPE_EPS = 1e-8
SR_LATTICE_MM = 0.05
SR_SLACK = 1e-9   # absolute slack; 0.05 is not exactly representable in binary


def _check_series(y_true, y_pred) -> tuple[np.ndarray, np.ndarray]:
    y = np.asarray(y_true, dtype=float).ravel()
    p = np.asarray(y_pred, dtype=float).ravel()
    if y.shape != p.shape:
        raise SchemaError(f"series length mismatch: {y.shape} vs {p.shape}")
    if y.size == 0:
        raise SchemaError("empty series")
    if not (np.isfinite(y).all() and np.isfinite(p).all()):
        raise SchemaError("series contain non-finite values")
    return y, p


def mae(y_true, y_pred) -> float:
    """Mean absolute error."""
    y, p = _check_series(y_true, y_pred)
    return float(np.mean(np.abs(y - p)))


def r_squared(y_true, y_pred) -> float:
    """Coefficient of determination; raises ZeroVariance on constant truth."""
    y, p = _check_series(y_true, y_pred)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        raise ZeroVariance("ground truth is constant; R^2 undefined")
    ss_res = float(np.sum((y - p) ** 2))
    return 1.0 - ss_res / ss_tot


def smape(y_true, y_pred) -> float:
    """Symmetric mean absolute percentage error, in percent."""
    y, p = _check_series(y_true, y_pred)
    denom = (np.abs(y) + np.abs(p)) / 2.0 + SMAPE_EPS
    return float(np.mean(np.abs(y - p) / denom) * 100.0)


@dataclass(frozen=True)
class ChannelMetrics:
    mae: float
    r2: float
    smape: float

    def to_dict(self) -> dict:
        return {"mae": self.mae, "r2": self.r2, "smape": self.smape}


@dataclass
class CalibrationReport:
    """MAE / R^2 / sMAPE per channel group (Fxy, Fz, Pxy, Pz)."""

    groups: dict[str, ChannelMetrics]
    n_samples: int
    normalized: bool

    def to_dict(self) -> dict:
        return {
            "groups": {g: m.to_dict() for g, m in self.groups.items()},
            "n_samples": self.n_samples,
            "normalized": self.normalized,
        }


def stacked_group_series(labels: np.ndarray, preds: np.ndarray,
                         group: str) -> tuple[np.ndarray, np.ndarray]:
    """Truth/prediction series for one channel group.

    The xy groups stack the x and y channels into a single series of length
    2n, which keeps R^2 and sMAPE well defined (a norm reduction would not).
    """
    idx = [LABEL_CHANNELS.index(c) for c in CHANNEL_GROUPS[group]]
    y = np.concatenate([labels[:, i] for i in idx])
    p = np.concatenate([preds[:, i] for i in idx])
    return y, p


def channel_report(dataset: SensorDataset, preds, split=None, selector: str = "test",
                   norm: NormParams | None = None,
                   normalized: bool = True) -> CalibrationReport:
    """Evaluate a prediction set against a dataset per channel group.

    ``split``/``selector`` restrict evaluation (selector=None evaluates every
    sample). With ``normalized`` both truth and prediction are min-max scaled
    by ``norm`` (defaults to parameters fitted on the split's train part).
    """
    if split is not None and selector is not None:
        mask = split.mask(dataset, selector)
        subset = dataset.subset(mask)
    else:
        subset = dataset
    missing = [sid for sid in subset.sample_ids if sid not in preds.id_index()]
    if missing:
        raise MissingPrediction(missing)
    pred_values = preds.lookup(subset.sample_ids)
    truth = subset.labels
    if normalized:
        if norm is None:
            if split is None:
                raise SchemaError("normalized metrics need norm params or a split to fit them")
            norm = fit_minmax(dataset, split)
        truth = normalize(truth, norm)
        pred_values = normalize(pred_values, norm)
    groups = {}
    for name in ("Fxy", "Fz", "Pxy", "Pz"):
        y, p = stacked_group_series(truth, pred_values, name)
        groups[name] = ChannelMetrics(mae=mae(y, p), r2=r_squared(y, p), smape=smape(y, p))
    return CalibrationReport(groups=groups, n_samples=subset.n_samples,
                             normalized=normalized)


# -- spatial resolution curve ----------------------------------------------------

@dataclass
class SRCurve:
    """Classification accuracy of grating resolution over tolerance thresholds."""

    thresholds: tuple[float, ...]
    accuracy: tuple[float, ...]
    n_pairs: int

    def at(self, threshold: float) -> float:
        for t, a in zip(self.thresholds, self.accuracy):
            if abs(t - threshold) <= SR_SLACK:
                return a
        raise KeyError(f"threshold {threshold} not on the curve")

    def to_dict(self) -> dict:
        return {
            "thresholds": list(self.thresholds),
            "accuracy": list(self.accuracy),
            "n_pairs": self.n_pairs,
        }


def check_lattice(values, what: str = "resolution") -> np.ndarray:
    """Validate values sit on the 0.05 mm grating lattice."""
    v = np.asarray(values, dtype=float).ravel()
    steps = v / SR_LATTICE_MM
    if not np.all(np.abs(steps - np.round(steps)) <= 1e-6):
        bad = v[np.abs(steps - np.round(steps)) > 1e-6]
        raise OffLattice(f"{what} values not multiples of 0.05 mm: {bad[:5]}")
    return v


def sr_curve(true_res, pred_res, thresholds) -> SRCurve:
    """Fraction of samples whose predicted resolution is within each
    tolerance of the truth (absolute slack 1e-9 for the float lattice)."""
    t = np.asarray(true_res, dtype=float).ravel()
    p = np.asarray(pred_res, dtype=float).ravel()
    if t.size == 0:
        raise EmptyPairs("no resolution pairs")
    if t.shape != p.shape:
        raise SchemaError("true/predicted resolution lengths differ")
    thr = check_lattice(thresholds, "threshold")
    if not np.all(np.diff(thr) > 0):
        raise SchemaError("thresholds must be strictly ascending")
    err = np.abs(p - t)
    accuracy = tuple(float(np.mean(err <= e + SR_SLACK)) for e in thr)
    return SRCurve(thresholds=tuple(float(e) for e in thr), accuracy=accuracy,
                   n_pairs=int(t.size))
