"""Cross-sensor radar summaries.

Each theme maps report values onto a fixed axis list; lower-is-better axes
are sign-flipped before per-axis min-max normalization across the compared
sensors, so 1 is always the best sensor on that axis. The raw, oriented and
normalized values are all emitted, making the charts self-describing.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InsufficientSensors, MissingAxisValue
from .report import EvalReport

# axis -> (higher_is_better, extractor)
_INTRINSIC = ("camera_resolution", "fov", "frame_rate", "gel_thickness", "sensitivity")
_STANDARD = ("force_error", "position_error", "spatial_resolution", "sensitivity")
_ROBUSTNESS = ("repeat_force", "repeat_position", "spatial_force",
               "spatial_position", "light_force", "light_position")

THEMES = {"intrinsic": _INTRINSIC, "standard": _STANDARD, "robustness": _ROBUSTNESS}

LOWER_IS_BETTER = {
    "force_error", "position_error",
    "repeat_force", "repeat_position", "spatial_force", "spatial_position",
}


@dataclass(frozen=True)
class RadarValue:
    sensor: str
    theme: str
    axis: str
    raw: float
    oriented: float
    normalized: float
    excluded: bool = False


def _require(value, sensor: str, axis: str) -> float:
    if value is None:
        raise MissingAxisValue(f"report for {sensor!r} lacks a value for axis {axis!r}")
    return float(value)


def _group_mean(section: dict | None, field: str, groups: tuple[str, str],
                sensor: str, axis: str) -> float:
    if section is None:
        raise MissingAxisValue(f"report for {sensor!r} lacks the section for axis {axis!r}")
    try:
        values = [section["groups"][g][field] for g in groups]
    except KeyError:
        raise MissingAxisValue(
            f"report for {sensor!r} lacks {groups} {field} for axis {axis!r}") from None
    return float(np.mean([_require(v, sensor, axis) for v in values]))


def _axis_value(report: EvalReport, theme: str, axis: str) -> tuple[float, bool]:
    """(raw value, excluded flag) for one sensor on one axis."""
    name = report.sensor_name
    if theme == "intrinsic":
        sensor = report.sensor
        key = {"camera_resolution": "camera_resolution_mp", "fov": "fov_mm2",
               "frame_rate": "fps_hz", "gel_thickness": "gel_thickness_mm"}.get(axis)
        if key is not None:
            return _require(sensor.get(key), name, axis), False
        if axis == "sensitivity":
            if report.sensitivity is None:
                raise MissingAxisValue(f"report for {name!r} lacks sensitivity for {axis!r}")
            return _require(report.sensitivity.get("mean_mu"), name, axis), False
    elif theme == "standard":
        if axis == "force_error":
            return _group_mean(report.calibration, "mae", ("Fxy", "Fz"), name, axis), False
        if axis == "position_error":
            return _group_mean(report.calibration, "mae", ("Pxy", "Pz"), name, axis), False
        if axis == "spatial_resolution":
            if report.sr is None:
                raise MissingAxisValue(f"report for {name!r} lacks the SR section")
            thresholds = report.sr["thresholds"]
            accuracy = report.sr["accuracy"]
            for t, a in zip(thresholds, accuracy):
                if abs(t - 0.05) <= 1e-9:
                    return float(a), False
            raise MissingAxisValue(f"report for {name!r} lacks SR at 0.05 mm")
        if axis == "sensitivity":
            if report.sensitivity is None:
                raise MissingAxisValue(f"report for {name!r} lacks sensitivity")
            return _require(report.sensitivity.get("mean_mu"), name, axis), False
    elif theme == "robustness":
        if axis == "repeat_force":
            return _rep_mean(report, ("Fxy", "Fz"), name, axis), False
        if axis == "repeat_position":
            return _rep_mean(report, ("Pxy", "Pz"), name, axis), False
        if axis == "spatial_force":
            return _group_mean(report.spatial, "r_spatial", ("Fxy", "Fz"), name, axis), False
        if axis == "spatial_position":
            return _group_mean(report.spatial, "r_spatial", ("Pxy", "Pz"), name, axis), False
        if axis in ("light_force", "light_position"):
            groups = ("Fxy", "Fz") if axis == "light_force" else ("Pxy", "Pz")
            section = report.light
            if section is None:
                raise MissingAxisValue(f"report for {name!r} lacks the light section")
            if section.get("excluded"):
                # Opaque sensor: nominal perfect score, marked so downstream
                # rendering can distinguish it from a measurement.
                return float(section.get("nominal_r_light", 1.0)), True
            means = section.get("mean_r_light", {})
            values = [means.get(g) for g in groups]
            if any(v is None for v in values):
                raise MissingAxisValue(
                    f"report for {name!r} has undefined mean R_light for {groups}")
            return float(np.mean(values)), False
    raise ValueError(f"unknown axis {axis!r} for theme {theme!r}")


def _rep_mean(report: EvalReport, groups: tuple[str, str], name: str, axis: str) -> float:
    if report.repeatability is None:
        raise MissingAxisValue(f"report for {name!r} lacks the repeatability section")
    channels = report.repeatability.get("channels", {})
    try:
        values = [channels[g]["rep"] for g in groups]
    except KeyError:
        raise MissingAxisValue(f"report for {name!r} lacks repeatability {groups}") from None
    return float(np.mean(values))


def radar_axes(reports: list[EvalReport], theme: str) -> list[RadarValue]:
    """Normalized axis scores for one theme across >= 2 sensors."""
    if theme not in THEMES:
        raise ValueError(f"unknown theme {theme!r}; pick from {sorted(THEMES)}")
    if len(reports) < 2:
        raise InsufficientSensors(f"radar needs >= 2 reports, got {len(reports)}")
    out: list[RadarValue] = []
    for axis in THEMES[theme]:
        raws, flags = [], []
        for report in reports:
            raw, excluded = _axis_value(report, theme, axis)
            raws.append(raw)
            flags.append(excluded)
        oriented = [-v if axis in LOWER_IS_BETTER else v for v in raws]
        lo, hi = min(oriented), max(oriented)
        span = hi - lo
        for report, raw, o, excluded in zip(reports, raws, oriented, flags):
            normalized = 0.5 if span == 0 else (o - lo) / span
            out.append(RadarValue(sensor=report.sensor_name, theme=theme, axis=axis,
                                  raw=raw, oriented=o, normalized=normalized,
                                  excluded=excluded))
    return out


def radar_table(reports: list[EvalReport], themes=None) -> list[RadarValue]:
    rows: list[RadarValue] = []
    for theme in (themes or THEMES):
        rows.extend(radar_axes(reports, theme))
    return rows


def save_radar_csv(rows: list[RadarValue], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["sensor", "theme", "axis", "raw_value", "oriented_value",
                         "normalized_value", "excluded"])
        for r in rows:
            writer.writerow([r.sensor, r.theme, r.axis, repr(r.raw), repr(r.oriented),
                             repr(r.normalized), "true" if r.excluded else "false"])
