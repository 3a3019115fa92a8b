"""Pluggable prediction layer.

A deterministic k-nearest-neighbor regressor over feature vectors stands in
for heavyweight learned models; any external model can participate through
the predictions.csv interface instead. A nearest-prototype classifier covers
the grating-resolution task.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial.distance import cdist

from .dataset import (
    NormParams,
    SensorDataset,
    SplitAssignment,
    denormalize,
    fit_minmax,
    normalize,
)
from .errors import (
    DimensionMismatch,
    KTooLarge,
    MissingClass,
    MissingPrediction,
    NoFeatures,
    SchemaError,
    UnknownSampleId,
)

MODEL_FORMAT = "tacbench-knn"
MODEL_VERSION = 1

PREDICTION_COLUMNS = (
    "sample_id", "pred_px_mm", "pred_py_mm", "pred_pz_mm",
    "pred_fx_n", "pred_fy_n", "pred_fz_n",
)


@dataclass
class PredictionSet:
    """sample_id -> predicted six-vector, raw units."""

    sample_ids: list[str]
    values: np.ndarray          # (n, 6)
    provenance: str = "external"

    def __post_init__(self):
        self._index = {sid: i for i, sid in enumerate(self.sample_ids)}
        if not np.isfinite(self.values).all():
            raise SchemaError("predictions contain non-finite values")

    def id_index(self) -> dict[str, int]:
        return self._index

    def lookup(self, sample_ids) -> np.ndarray:
        try:
            idx = [self._index[sid] for sid in sample_ids]
        except KeyError:
            missing = [sid for sid in sample_ids if sid not in self._index]
            raise MissingPrediction(missing) from None
        return self.values[idx]


def save_predictions(preds: PredictionSet, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(PREDICTION_COLUMNS)
        for sid, row in zip(preds.sample_ids, preds.values):
            writer.writerow([sid, *(repr(float(v)) for v in row)])


def load_predictions(path: str | Path, dataset: SensorDataset | None = None) -> PredictionSet:
    """Parse predictions.csv; with a dataset, reject ids it does not contain."""
    ids: list[str] = []
    rows: list[list[float]] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != PREDICTION_COLUMNS:
            raise SchemaError(f"{path}: expected header {','.join(PREDICTION_COLUMNS)}")
        for row in reader:
            if len(row) != 7:
                raise SchemaError(f"{path}: row with {len(row)} fields, expected 7")
            ids.append(row[0])
            rows.append([float(v) for v in row[1:]])
    preds = PredictionSet(sample_ids=ids, values=np.array(rows, dtype=float).reshape(len(ids), 6),
                          provenance="external")
    if dataset is not None:
        known = set(dataset.sample_ids)
        unknown = [sid for sid in ids if sid not in known]
        if unknown:
            raise UnknownSampleId(
                f"{len(unknown)} prediction id(s) not in dataset: {unknown[:5]}")
    return preds


# -- k-NN baseline -----------------------------------------------------------------

@dataclass
class BaselineModel:
    k: int
    norm: NormParams
    train_ids: list[str]
    train_features: np.ndarray      # (n, F)
    train_labels_norm: np.ndarray   # (n, 6)

    @property
    def feature_dim(self) -> int:
        return self.train_features.shape[1]


def fit_baseline(dataset: SensorDataset, split: SplitAssignment, k: int = 3,
                 norm: NormParams | None = None) -> BaselineModel:
    """Store the normalized training pairs; prediction is the mean of the k
    nearest training labels (Euclidean over features)."""
    if dataset.features is None:
        raise NoFeatures("dataset carries no feature vectors")
    mask = split.mask(dataset, "train")
    n_train = int(mask.sum())
    if k < 1 or k > n_train:
        raise KTooLarge(f"k={k} outside [1, {n_train}]")
    if norm is None:
        norm = fit_minmax(dataset, split)
    train = dataset.subset(mask)
    # Stored in ascending sample_id order so that "first minimum" during
    # prediction realizes the id tie-break rule.
    order = np.argsort(np.array(train.sample_ids))
    return BaselineModel(
        k=k, norm=norm, train_ids=[train.sample_ids[i] for i in order],
        train_features=train.features[order].copy(),
        train_labels_norm=normalize(train.labels, norm)[order],
    )


def predict(model: BaselineModel, dataset: SensorDataset,
            batch: int = 1024) -> PredictionSet:
    """Predict raw-unit six-vectors for every sample in the dataset.

    Distance ties are broken by ascending training sample_id so repeated runs
    are bit-identical.
    """
    if dataset.features is None:
        raise NoFeatures("dataset carries no feature vectors")
    if dataset.features.shape[1] != model.feature_dim:
        raise DimensionMismatch(
            f"feature dim {dataset.features.shape[1]} != model dim {model.feature_dim}")
    k = model.k
    out = np.empty((dataset.n_samples, 6))
    for start in range(0, dataset.n_samples, batch):
        stop = min(start + batch, dataset.n_samples)
        d = cdist(dataset.features[start:stop], model.train_features)
        rows = np.arange(d.shape[0])
        acc = np.zeros((d.shape[0], 6))
        # k vectorized argmin passes; the training set is id-sorted, so the
        # first minimum of a tie is the lowest sample_id.
        for _ in range(k):
            j = np.argmin(d, axis=1)
            acc += model.train_labels_norm[j]
            d[rows, j] = np.inf
        out[start:stop] = acc / k
    return PredictionSet(sample_ids=list(dataset.sample_ids),
                         values=denormalize(out, model.norm),
                         provenance="baseline")


def save_model(model: BaselineModel, path: str | Path) -> None:
    payload = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "k": model.k,
        "norm": model.norm.to_dict(),
        "train_ids": model.train_ids,
        "features": [[float(v) for v in row] for row in model.train_features],
        "labels_norm": [[float(v) for v in row] for row in model.train_labels_norm],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True)
        fh.write("\n")


def load_model(path: str | Path) -> BaselineModel:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("format") != MODEL_FORMAT or payload.get("version") != MODEL_VERSION:
        raise SchemaError(
            f"{path}: not a {MODEL_FORMAT} v{MODEL_VERSION} dump "
            f"(found {payload.get('format')!r} v{payload.get('version')!r})")
    return BaselineModel(
        k=int(payload["k"]),
        norm=NormParams.from_dict(payload["norm"]),
        train_ids=list(payload["train_ids"]),
        train_features=np.array(payload["features"], dtype=float),
        train_labels_norm=np.array(payload["labels_norm"], dtype=float),
    )


# -- grating-resolution classifier ----------------------------------------------------

@dataclass
class ResolutionClassifier:
    """Nearest class-mean prototype over grating features."""

    resolutions: np.ndarray     # (C,) ascending, mm
    prototypes: np.ndarray      # (C, F)


def fit_resolution_classifier(features: np.ndarray, resolutions_mm: np.ndarray,
                              expected_resolutions=None) -> ResolutionClassifier:
    feats = np.asarray(features, dtype=float)
    res = np.asarray(resolutions_mm, dtype=float)
    classes = np.unique(res)
    if expected_resolutions is not None:
        missing = sorted(set(np.round(np.asarray(expected_resolutions, dtype=float), 9))
                         - set(np.round(classes, 9)))
        if missing:
            raise MissingClass(f"no training samples for resolutions {missing}")
    if classes.size == 0:
        raise MissingClass("no training samples at all")
    prototypes = np.stack([feats[res == c].mean(axis=0) for c in classes])
    return ResolutionClassifier(resolutions=classes, prototypes=prototypes)


def classify_resolution(clf: ResolutionClassifier, features: np.ndarray) -> np.ndarray:
    """Predicted resolution = resolution of the nearest prototype (ties go to
    the finer grating, i.e. first in ascending order)."""
    feats = np.asarray(features, dtype=float)
    if feats.ndim == 1:
        feats = feats[None, :]
    if feats.shape[1] != clf.prototypes.shape[1]:
        raise DimensionMismatch(
            f"feature dim {feats.shape[1]} != classifier dim {clf.prototypes.shape[1]}")
    d = cdist(feats, clf.prototypes)
    return clf.resolutions[np.argmin(d, axis=1)]
