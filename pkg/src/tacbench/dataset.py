"""Data model for probe datasets: manifests, sample tables, splits, normalization.

File formats
------------
manifest.json
    sensor_name, camera_resolution_mp, gel_thickness_mm, fov_mm2, fps_hz,
    max_depth_mm, max_force_n, center_x_mm, center_y_mm, max_radius_mm
    (optional: channels_supported, opaque).
samples.csv, exact column order
    sample_id, point_id, trial_id, depth_step, px_mm, py_mm, pz_mm,
    fx_n, fy_n, fz_n, intensity, scene_id, feature_0..feature_{F-1}
    (or a single image_path column instead of features).
split.csv
    sample_id, split in {train, val, test}.

Floats are written with ``repr`` so a save/load round trip is bit exact.
"""
from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DegenerateChannel,
    DuplicateSampleId,
    EmptySplit,
    MissingColumn,
    SafeLimitViolation,
    SchemaError,
)

LABEL_CHANNELS = ("px_mm", "py_mm", "pz_mm", "fx_n", "fy_n", "fz_n")
CHANNEL_GROUPS = {
    "Pxy": ("px_mm", "py_mm"),
    "Pz": ("pz_mm",),
    "Fxy": ("fx_n", "fy_n"),
    "Fz": ("fz_n",),
}
FIXED_COLUMNS = (
    "sample_id", "point_id", "trial_id", "depth_step",
    "px_mm", "py_mm", "pz_mm", "fx_n", "fy_n", "fz_n",
    "intensity", "scene_id",
)
SPLIT_NAMES = ("train", "val", "test")

_MANIFEST_KEYS = (
    "sensor_name", "camera_resolution_mp", "gel_thickness_mm", "fov_mm2",
    "fps_hz", "max_depth_mm", "max_force_n", "center_x_mm", "center_y_mm",
    "max_radius_mm",
)


def _fmt(x: float) -> str:
    return repr(float(x))


@dataclass(frozen=True)
class SensorManifest:
    """Intrinsic metadata and safe operating range of one sensor."""

    sensor_name: str
    camera_resolution_mp: float
    gel_thickness_mm: float
    fov_mm2: float
    fps_hz: float
    max_depth_mm: float
    max_force_n: float
    center_x_mm: float
    center_y_mm: float
    max_radius_mm: float
    channels_supported: tuple[str, ...] = LABEL_CHANNELS
    opaque: bool = False

    def __post_init__(self):
        for key in _MANIFEST_KEYS[1:]:
            value = getattr(self, key)
            if not np.isfinite(value) or value <= 0:
                raise SchemaError(f"manifest field {key} must be strictly positive, got {value}")
        unknown = set(self.channels_supported) - set(LABEL_CHANNELS)
        if unknown:
            raise SchemaError(f"unknown channels in channels_supported: {sorted(unknown)}")

    @property
    def center_xy(self) -> tuple[float, float]:
        return (self.center_x_mm, self.center_y_mm)

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in _MANIFEST_KEYS}
        d["channels_supported"] = list(self.channels_supported)
        d["opaque"] = self.opaque
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "SensorManifest":
        missing = [k for k in _MANIFEST_KEYS if k not in data]
        if missing:
            raise MissingColumn(f"manifest missing keys: {missing}")
        kwargs = {k: data[k] for k in _MANIFEST_KEYS}
        kwargs["channels_supported"] = tuple(data.get("channels_supported", LABEL_CHANNELS))
        kwargs["opaque"] = bool(data.get("opaque", False))
        return cls(**kwargs)


@dataclass(frozen=True)
class ProbeSample:
    """One synchronized probe observation with ground-truth labels."""

    sample_id: str
    point_id: int
    trial_id: int
    depth_step: int
    px_mm: float
    py_mm: float
    pz_mm: float
    fx_n: float
    fy_n: float
    fz_n: float
    intensity: float
    scene_id: str
    features: np.ndarray | None = None
    image_path: str | None = None

    def label_vector(self) -> np.ndarray:
        return np.array(
            [self.px_mm, self.py_mm, self.pz_mm, self.fx_n, self.fy_n, self.fz_n]
        )


@dataclass
class SensorDataset:
    """Columnar view over a manifest plus its sample table."""

    manifest: SensorManifest
    sample_ids: list[str]
    point_ids: np.ndarray
    trial_ids: np.ndarray
    depth_steps: np.ndarray
    labels: np.ndarray            # (n, 6) in LABEL_CHANNELS order
    intensity: np.ndarray
    scene_ids: list[str]
    features: np.ndarray | None = None   # (n, F)
    image_paths: list[str] | None = None
    _id_index: dict[str, int] | None = field(default=None, repr=False)

    @property
    def n_samples(self) -> int:
        return len(self.sample_ids)

    @property
    def feature_dim(self) -> int:
        return 0 if self.features is None else self.features.shape[1]

    def id_index(self) -> dict[str, int]:
        if self._id_index is None:
            self._id_index = {sid: i for i, sid in enumerate(self.sample_ids)}
        return self._id_index

    def channel(self, name: str) -> np.ndarray:
        return self.labels[:, LABEL_CHANNELS.index(name)]

    def subset(self, mask: np.ndarray) -> "SensorDataset":
        idx = np.flatnonzero(mask)
        return SensorDataset(
            manifest=self.manifest,
            sample_ids=[self.sample_ids[i] for i in idx],
            point_ids=self.point_ids[idx],
            trial_ids=self.trial_ids[idx],
            depth_steps=self.depth_steps[idx],
            labels=self.labels[idx],
            intensity=self.intensity[idx],
            scene_ids=[self.scene_ids[i] for i in idx],
            features=None if self.features is None else self.features[idx],
            image_paths=None if self.image_paths is None
            else [self.image_paths[i] for i in idx],
        )

    @classmethod
    def from_samples(cls, manifest: SensorManifest, samples: list[ProbeSample]) -> "SensorDataset":
        has_features = samples[0].features is not None if samples else False
        feats = None
        paths = None
        if has_features:
            feats = np.array([s.features for s in samples], dtype=float)
        elif samples and samples[0].image_path is not None:
            paths = [s.image_path for s in samples]
        return cls(
            manifest=manifest,
            sample_ids=[s.sample_id for s in samples],
            point_ids=np.array([s.point_id for s in samples], dtype=int),
            trial_ids=np.array([s.trial_id for s in samples], dtype=int),
            depth_steps=np.array([s.depth_step for s in samples], dtype=int),
            labels=np.array([s.label_vector() for s in samples], dtype=float).reshape(len(samples), 6),
            intensity=np.array([s.intensity for s in samples], dtype=float),
            scene_ids=[s.scene_id for s in samples],
            features=feats,
            image_paths=paths,
        )


@dataclass
class Violation:
    code: str
    sample_id: str
    message: str


def validate_dataset(dataset: SensorDataset) -> list[Violation]:
    """Collect every per-sample violation of the manifest's safe limits and
    the dataset uniqueness invariants."""
    out: list[Violation] = []
    seen_ids: set[str] = set()
    seen_keys: set[tuple] = set()
    m = dataset.manifest
    pz = dataset.channel("pz_mm")
    fz = dataset.channel("fz_n")
    for i, sid in enumerate(dataset.sample_ids):
        if sid in seen_ids:
            out.append(Violation("DuplicateSampleId", sid, f"duplicate sample_id {sid!r}"))
        seen_ids.add(sid)
        key = (dataset.point_ids[i], dataset.depth_steps[i], dataset.trial_ids[i])
        if key in seen_keys:
            out.append(Violation(
                "DuplicateSampleId", sid,
                f"duplicate (point_id, depth_step, trial_id) = {key}"))
        seen_keys.add(key)
        if pz[i] < 0:
            out.append(Violation("SafeLimitViolation", sid, f"Pz {pz[i]} < 0"))
        if pz[i] > m.max_depth_mm:
            out.append(Violation(
                "SafeLimitViolation", sid,
                f"Pz {pz[i]} exceeds max_depth {m.max_depth_mm}"))
        if abs(fz[i]) > m.max_force_n:
            out.append(Violation(
                "SafeLimitViolation", sid,
                f"|Fz| {abs(fz[i])} exceeds max_force {m.max_force_n}"))
        if not 0.0 <= dataset.intensity[i] <= 255.0:
            out.append(Violation(
                "SafeLimitViolation", sid,
                f"intensity {dataset.intensity[i]} outside [0, 255]"))
    return out


_VIOLATION_EXC = {
    "DuplicateSampleId": DuplicateSampleId,
    "SafeLimitViolation": SafeLimitViolation,
}


def _raise_violations(violations: list[Violation]) -> None:
    first = violations[0]
    exc = _VIOLATION_EXC[first.code](first.message)
    exc.violations = violations
    raise exc


def load_manifest(path: str | Path) -> SensorManifest:
    with open(path, encoding="utf-8") as fh:
        return SensorManifest.from_dict(json.load(fh))


def save_manifest(manifest: SensorManifest, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_dataset(manifest_path: str | Path, samples_path: str | Path,
                 strict: bool = True) -> SensorDataset:
    """Parse manifest + sample table.

    With ``strict`` (default), the first safe-limit or uniqueness violation is
    raised (all collected violations ride on the exception's ``violations``
    attribute). Schema problems always raise.
    """
    manifest = load_manifest(manifest_path)
    with open(samples_path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{samples_path}: empty sample table") from None
        feature_cols, has_image = _check_header(header, samples_path)
        rows = list(reader)

    n = len(rows)
    width = len(FIXED_COLUMNS) + (len(feature_cols) if not has_image else 1)
    for row in rows:
        if len(row) != width:
            raise SchemaError(
                f"{samples_path}: row with {len(row)} fields, expected {width}")

    sample_ids = [r[0] for r in rows]
    point_ids = np.array([int(r[1]) for r in rows], dtype=int)
    trial_ids = np.array([int(r[2]) for r in rows], dtype=int)
    depth_steps = np.array([int(r[3]) for r in rows], dtype=int)
    labels = np.array([[float(v) for v in r[4:10]] for r in rows], dtype=float).reshape(n, 6)
    intensity = np.array([float(r[10]) for r in rows], dtype=float)
    scene_ids = [r[11] for r in rows]
    features = None
    image_paths = None
    if has_image:
        image_paths = [r[12] for r in rows]
    elif feature_cols:
        features = np.array([[float(v) for v in r[12:]] for r in rows], dtype=float)

    dataset = SensorDataset(
        manifest=manifest, sample_ids=sample_ids, point_ids=point_ids,
        trial_ids=trial_ids, depth_steps=depth_steps, labels=labels,
        intensity=intensity, scene_ids=scene_ids, features=features,
        image_paths=image_paths,
    )
    if strict:
        violations = validate_dataset(dataset)
        if violations:
            _raise_violations(violations)
    return dataset


def _check_header(header: list[str], path) -> tuple[list[str], bool]:
    if tuple(header[: len(FIXED_COLUMNS)]) != FIXED_COLUMNS:
        missing = [c for c in FIXED_COLUMNS if c not in header]
        if missing:
            raise MissingColumn(f"{path}: missing columns {missing}")
        raise SchemaError(f"{path}: fixed columns out of order: {header[:len(FIXED_COLUMNS)]}")
    tail = header[len(FIXED_COLUMNS):]
    if tail == ["image_path"]:
        return [], True
    expected = [f"feature_{i}" for i in range(len(tail))]
    if tail != expected:
        raise SchemaError(f"{path}: trailing columns must be feature_0..feature_{{F-1}} "
                          f"or image_path, got {tail}")
    return tail, False


def save_dataset(dataset: SensorDataset, out_dir: str | Path) -> dict[str, str]:
    """Write manifest.json + samples.csv; returns the written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest_path = out / "manifest.json"
    samples_path = out / "samples.csv"
    save_manifest(dataset.manifest, manifest_path)
    header = list(FIXED_COLUMNS)
    if dataset.features is not None:
        header += [f"feature_{i}" for i in range(dataset.feature_dim)]
    elif dataset.image_paths is not None:
        header += ["image_path"]
    with open(samples_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for i, sid in enumerate(dataset.sample_ids):
            row = [
                sid,
                str(int(dataset.point_ids[i])),
                str(int(dataset.trial_ids[i])),
                str(int(dataset.depth_steps[i])),
                *(_fmt(v) for v in dataset.labels[i]),
                _fmt(dataset.intensity[i]),
                dataset.scene_ids[i],
            ]
            if dataset.features is not None:
                row += [_fmt(v) for v in dataset.features[i]]
            elif dataset.image_paths is not None:
                row.append(dataset.image_paths[i])
            writer.writerow(row)
    return {"manifest": str(manifest_path), "samples": str(samples_path)}


# -- normalization -----------------------------------------------------------

@dataclass(frozen=True)
class NormParams:
    """Per-channel (min, max) pairs fitted on the training split."""

    mins: tuple[float, ...]
    maxs: tuple[float, ...]

    def __post_init__(self):
        if len(self.mins) != 6 or len(self.maxs) != 6:
            raise SchemaError("NormParams needs six channels")
        for c, (lo, hi) in enumerate(zip(self.mins, self.maxs)):
            if not hi > lo:
                raise DegenerateChannel(
                    f"channel {LABEL_CHANNELS[c]} has max {hi} <= min {lo}")

    def to_dict(self) -> dict:
        return {"mins": list(self.mins), "maxs": list(self.maxs)}

    @classmethod
    def from_dict(cls, data: dict) -> "NormParams":
        return cls(mins=tuple(data["mins"]), maxs=tuple(data["maxs"]))


IDENTITY_NORM = NormParams(mins=(0.0,) * 6, maxs=(1.0,) * 6)


def fit_minmax(dataset: SensorDataset, split: "SplitAssignment") -> NormParams:
    """Min-max ranges per label channel over the training split only."""
    mask = split.mask(dataset, "train")
    if not mask.any():
        raise EmptySplit("training split is empty")
    train = dataset.labels[mask]
    mins = train.min(axis=0)
    maxs = train.max(axis=0)
    for c in range(6):
        if maxs[c] <= mins[c]:
            raise DegenerateChannel(
                f"channel {LABEL_CHANNELS[c]} is constant ({mins[c]}) over the training split")
    return NormParams(mins=tuple(float(v) for v in mins),
                      maxs=tuple(float(v) for v in maxs))


def normalize(values: np.ndarray, params: NormParams) -> np.ndarray:
    """(v - min) / (max - min) per channel. Out-of-range inputs are allowed
    and map outside [0, 1] (clamping would bias error metrics)."""
    v = np.asarray(values, dtype=float)
    mins = np.array(params.mins)
    span = np.array(params.maxs) - mins
    return (v - mins) / span


def denormalize(values: np.ndarray, params: NormParams) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    mins = np.array(params.mins)
    span = np.array(params.maxs) - mins
    return v * span + mins


# -- splits --------------------------------------------------------------------

@dataclass
class SplitAssignment:
    """sample_id -> {train, val, test} plus the seed that produced it."""

    assignment: dict[str, str]
    seed: int

    def mask(self, dataset: SensorDataset, name: str) -> np.ndarray:
        return np.array([self.assignment.get(sid) == name for sid in dataset.sample_ids])

    def counts(self) -> dict[str, int]:
        out = {name: 0 for name in SPLIT_NAMES}
        for v in self.assignment.values():
            out[v] += 1
        return out


def _allocate(total: int, ratios: tuple[float, float, float]) -> list[int]:
    # Largest-remainder allocation; zero splits steal one from the largest.
    exact = [total * r for r in ratios]
    counts = [int(np.floor(e)) for e in exact]
    remainders = [e - c for e, c in zip(exact, counts)]
    for _ in range(total - sum(counts)):
        i = int(np.argmax(remainders))
        counts[i] += 1
        remainders[i] = -1.0
    if total >= len(ratios):
        for i, c in enumerate(counts):
            if c == 0:
                counts[int(np.argmax(counts))] -= 1
                counts[i] += 1
    return counts


def split_dataset(dataset: SensorDataset,
                  ratios: tuple[float, float, float] = (0.7, 0.2, 0.1),
                  seed: int = 0,
                  group_by_point: bool = False) -> SplitAssignment:
    """Deterministic 70:20:10 partition.

    Per-sample by default; with ``group_by_point`` every sample sharing a
    point_id lands in the same split (prevents probe-location leakage, at the
    cost of counts deviating by up to one point's worth of samples).
    """
    n = dataset.n_samples
    if n == 0:
        raise EmptySplit("dataset is empty")
    rng = np.random.default_rng(seed)
    assignment: dict[str, str] = {}
    if group_by_point:
        points = sorted(set(int(p) for p in dataset.point_ids))
        if len(points) < 3:
            raise EmptySplit(f"need >= 3 probe points to populate all splits, got {len(points)}")
        order = rng.permutation(len(points))
        counts = _allocate(len(points), ratios)
        split_of_point: dict[int, str] = {}
        pos = 0
        for name, c in zip(SPLIT_NAMES, counts):
            for j in order[pos:pos + c]:
                split_of_point[points[j]] = name
            pos += c
        for sid, pid in zip(dataset.sample_ids, dataset.point_ids):
            assignment[sid] = split_of_point[int(pid)]
    else:
        if n < 3:
            raise EmptySplit(f"need >= 3 samples to populate all splits, got {n}")
        order = rng.permutation(n)
        counts = _allocate(n, ratios)
        pos = 0
        for name, c in zip(SPLIT_NAMES, counts):
            for j in order[pos:pos + c]:
                assignment[dataset.sample_ids[j]] = name
            pos += c
    if any(v == 0 for v in SplitAssignment(assignment, seed).counts().values()):
        raise EmptySplit("dataset too small to populate train/val/test")
    return SplitAssignment(assignment=assignment, seed=seed)


def save_split(split: SplitAssignment, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["sample_id", "split"])
        for sid, name in split.assignment.items():
            writer.writerow([sid, name])


def load_split(path: str | Path, seed: int = -1) -> SplitAssignment:
    assignment: dict[str, str] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["sample_id", "split"]:
            raise SchemaError(f"{path}: expected header sample_id,split, got {header}")
        for row in reader:
            if len(row) != 2 or row[1] not in SPLIT_NAMES:
                raise SchemaError(f"{path}: bad split row {row}")
            assignment[row[0]] = row[1]
    return SplitAssignment(assignment=assignment, seed=seed)


# -- geometry helpers ----------------------------------------------------------

def radial_distance(px, py, manifest: SensorManifest, warn: bool = True):
    """Distance from the surface center, normalized by max_radius and clamped
    to [0, 1]. Accepts scalars or arrays."""
    r = np.hypot(np.asarray(px, dtype=float) - manifest.center_x_mm,
                 np.asarray(py, dtype=float) - manifest.center_y_mm) / manifest.max_radius_mm
    clamped = int(np.count_nonzero(r > 1.0))
    if clamped and warn:
        warnings.warn(f"{clamped} sample(s) beyond max_radius; distances clamped to 1.0",
                      RuntimeWarning, stacklevel=2)
    return np.clip(r, 0.0, 1.0) if np.ndim(r) else float(min(max(r, 0.0), 1.0))


def normalized_depth(pz, manifest: SensorManifest):
    """Pz / max_depth; analysis axis in [0, 1]."""
    return np.asarray(pz, dtype=float) / manifest.max_depth_mm
