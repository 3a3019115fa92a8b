"""Consolidated evaluation report: assembly, JSON round trip, CSV emission.

Reports are plain JSON documents with a version tag. Sections that were not
evaluated stay ``null`` (absent, not zeroed). Serialization is deterministic
(sorted keys, repr floats) so emit -> ingest -> emit is byte identical.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import SchemaVersionMismatch
from .robustness import LightTable, RepeatabilityResult
from .spatial import BinSeries, SensitivityMap, SpatialRobustness

SCHEMA_VERSION = 1
SECTION_NAMES = ("calibration", "sr", "sensitivity", "spatial", "light", "repeatability")


@dataclass
class EvalReport:
    sensor: dict
    config: dict
    calibration: dict | None = None
    sr: dict | None = None
    sensitivity: dict | None = None
    spatial: dict | None = None
    light: dict | None = None
    repeatability: dict | None = None
    schema_version: int = SCHEMA_VERSION

    @property
    def sensor_name(self) -> str:
        return self.sensor.get("sensor_name", "unknown")

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "sensor": self.sensor,
            "config": self.config,
            "sections": {name: getattr(self, name) for name in SECTION_NAMES},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EvalReport":
        version = data.get("schema_version")
        if version != SCHEMA_VERSION:
            raise SchemaVersionMismatch(
                f"report schema_version {version!r}, expected {SCHEMA_VERSION}")
        sections = data.get("sections", {})
        return cls(sensor=data["sensor"], config=data["config"],
                   **{name: sections.get(name) for name in SECTION_NAMES})


def assemble_report(sensor: dict, config: dict, **sections) -> EvalReport:
    """Build a report from whatever sections were evaluated."""
    unknown = set(sections) - set(SECTION_NAMES)
    if unknown:
        raise ValueError(f"unknown report sections: {sorted(unknown)}")
    return EvalReport(sensor=sensor, config=config, **sections)


def report_json(report: EvalReport) -> str:
    return json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"


def save_report(report: EvalReport, path: str | Path) -> None:
    Path(path).write_text(report_json(report), encoding="utf-8")


def load_report(path: str | Path) -> EvalReport:
    with open(path, encoding="utf-8") as fh:
        return EvalReport.from_dict(json.load(fh))


# -- CSV emitters ------------------------------------------------------------------

def _writer(path):
    fh = open(path, "w", newline="", encoding="utf-8")
    return fh, csv.writer(fh, lineterminator="\n")


def _fmt(x) -> str:
    return repr(float(x))


def save_heatmap_csv(smap: SensitivityMap, path: str | Path) -> None:
    fh, writer = _writer(path)
    with fh:
        writer.writerow(["bin_x_index", "bin_y_index", "x_center_mm",
                         "y_center_mm", "mean_s_mm_per_n", "count"])
        ny, nx = smap.grid.shape
        xc = 0.5 * (smap.x_edges[:-1] + smap.x_edges[1:])
        yc = 0.5 * (smap.y_edges[:-1] + smap.y_edges[1:])
        for iy in range(ny):
            for ix in range(nx):
                count = int(smap.occupancy[iy, ix])
                if count == 0:
                    continue
                writer.writerow([ix, iy, _fmt(xc[ix]), _fmt(yc[iy]),
                                 _fmt(smap.grid[iy, ix]), count])


def save_binseries_csv(series_list: list[tuple[str, BinSeries, np.ndarray]],
                       path: str | Path) -> None:
    """Each entry: (group, series, smoothed means aligned to the bins)."""
    fh, writer = _writer(path)
    with fh:
        writer.writerow(["group", "axis", "bin_center", "mean_mae", "count",
                         "smoothed_mae"])
        for group, series, smoothed in series_list:
            for i in range(series.bin_centers.size):
                if series.bin_counts[i] == 0:
                    continue
                writer.writerow([group, series.axis, _fmt(series.bin_centers[i]),
                                 _fmt(series.bin_means[i]),
                                 int(series.bin_counts[i]), _fmt(smoothed[i])])


def load_binseries_csv(path: str | Path,
                       bin_width: float = 0.01) -> dict[tuple[str, str], BinSeries]:
    """Rebuild BinSeries objects from an emitted binseries.csv.

    The file stores occupied bins only; the full [0, 1] grid is recovered
    from the bin width the series was computed with.
    """
    n_bins = int(np.ceil(round(1.0 / bin_width, 9)))
    out: dict[tuple[str, str], BinSeries] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        expected = ["group", "axis", "bin_center", "mean_mae", "count", "smoothed_mae"]
        if header != expected:
            from .errors import SchemaError
            raise SchemaError(f"{path}: expected header {','.join(expected)}")
        for row in reader:
            group, axis = row[0], row[1]
            key = (group, axis)
            if key not in out:
                centers = (np.arange(n_bins) + 0.5) * bin_width
                out[key] = BinSeries(axis=axis, bin_width=bin_width,
                                     bin_centers=centers,
                                     bin_means=np.full(n_bins, np.nan),
                                     bin_counts=np.zeros(n_bins, dtype=int))
            idx = int(round(float(row[2]) / bin_width - 0.5))
            out[key].bin_means[idx] = float(row[3])
            out[key].bin_counts[idx] = int(row[4])
    return out


def save_light_csv(table: LightTable, path: str | Path) -> None:
    fh, writer = _writer(path)
    with fh:
        writer.writerow(["scene_id", "group", "mae_baseline", "mae_scene",
                         "intensity_baseline", "intensity_scene",
                         "degradation_pct", "r_light"])
        for row in table.rows:
            writer.writerow([
                row.scene_id, row.group, _fmt(row.mae_baseline), _fmt(row.mae_scene),
                _fmt(row.intensity_baseline), _fmt(row.intensity_scene),
                _fmt(row.degradation_pct),
                "UNDEFINED" if row.r_light is None else _fmt(row.r_light),
            ])
        for group, deg in table.mean_degradation.items():
            score = table.mean_r_light[group]
            writer.writerow(["mean", group, "", "", "", "", _fmt(deg),
                             "UNDEFINED" if score is None else _fmt(score)])


def save_repeatability_csv(results: dict[str, RepeatabilityResult],
                           rep_path: str | Path, curve_path: str | Path) -> None:
    fh, writer = _writer(rep_path)
    with fh:
        writer.writerow(["channel", "rep_value"])
        for channel, result in results.items():
            writer.writerow([channel, _fmt(result.rep)])
    fh, writer = _writer(curve_path)
    with fh:
        writer.writerow(["channel", "depth_step", "mean_std"])
        for channel, result in results.items():
            for depth, value in result.depth_curve:
                writer.writerow([channel, depth, _fmt(value)])


def spatial_section(results: dict[str, SpatialRobustness], bin_width: float,
                    window: int) -> dict:
    return {
        "groups": {g: r.to_dict() for g, r in results.items()},
        "bin_width": bin_width,
        "window": window,
    }
