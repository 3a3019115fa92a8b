"""Stage orchestration over on-disk workspaces.

Every function takes paths plus parameters, writes its artifacts, and returns
a JSON-shaped summary with the list of files written. The HTTP service and
the CLI are both thin wrappers around these entry points.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from . import dataset as ds
from . import metrics as me
from . import predictor as pr
from . import robustness as rb
from . import simulator as sim
from . import spatial as sp
from .config import EvalConfig, derive_seed
from .errors import SchemaError
from .radar import radar_table, save_radar_csv
from .report import (
    assemble_report,
    load_report,
    save_binseries_csv,
    save_heatmap_csv,
    save_light_csv,
    save_repeatability_csv,
    save_report,
    spatial_section,
)
from .svgplot import heatmap_svg, radar_svg, save_svg

DEFAULT_PROTOCOLS = ("calibration", "spatial", "gratings", "repeatability", "scenes")


def _load_dataset_dir(path: str | Path) -> ds.SensorDataset:
    d = Path(path)
    return ds.load_dataset(d / "manifest.json", d / "samples.csv")


def _write_json(payload: dict, path: Path) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")


def simulate(spec: sim.SimSensorSpec, out_dir: str | Path, seed: int = 0,
             protocols=DEFAULT_PROTOCOLS,
             calibration_grid: int = 40, depths_per_point: int = 4,
             repeat_points: int = 100, repeat_trials: int = 10,
             scene_grid: int = 12, scene_depths: int = 2,
             grating_presses: int = 100) -> dict:
    """Run the selected protocols for one virtual sensor into a workspace."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    sensor = sim.VirtualSensor(spec)
    files: list[str] = []
    counts: dict[str, int] = {}
    sim.save_simspec(spec, out / "simspec.json")
    files.append(str(out / "simspec.json"))

    if "calibration" in protocols:
        data = sim.run_calibration_protocol(
            sensor, grid_n=calibration_grid, depths_per_point=depths_per_point,
            seed=derive_seed(seed, "calibration-run"), id_prefix="c")
        files.extend(ds.save_dataset(data, out / "calibration").values())
        counts["calibration"] = data.n_samples
    if "spatial" in protocols:
        data = sim.run_calibration_protocol(
            sensor, grid_n=calibration_grid, depths_per_point=depths_per_point,
            seed=derive_seed(seed, "spatial-run"), id_prefix="s")
        files.extend(ds.save_dataset(data, out / "spatial").values())
        counts["spatial"] = data.n_samples
    if "gratings" in protocols:
        data, res = sim.run_grating_protocol(
            sensor, presses_per_board=grating_presses,
            seed=derive_seed(seed, "grating-run"))
        files.extend(ds.save_dataset(data, out / "gratings").values())
        res_path = out / "gratings" / "resolutions.csv"
        with open(res_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["sample_id", "res_mm"])
            for sid, r in zip(data.sample_ids, res):
                writer.writerow([sid, repr(float(r))])
        files.append(str(res_path))
        counts["gratings"] = data.n_samples
    if "repeatability" in protocols:
        data = sim.run_repeatability_protocol(
            sensor, k_points=repeat_points, n_trials=repeat_trials,
            seed=derive_seed(seed, "repeat-run"))
        files.extend(ds.save_dataset(data, out / "repeat").values())
        counts["repeat"] = data.n_samples
    if "scenes" in protocols:
        for scene_id in sorted(spec.scene_gains):
            if scene_id == sim.BASELINE_SCENE:
                continue
            variant = sim.apply_scene(sensor, scene_id)
            data = sim.run_calibration_protocol(
                variant, grid_n=scene_grid, depths_per_point=scene_depths,
                seed=derive_seed(seed, f"scene-run-{scene_id}"),
                id_prefix=f"{scene_id.lower()}_")
            files.extend(ds.save_dataset(data, out / "scenes" / scene_id).values())
            counts[f"scene:{scene_id}"] = data.n_samples
    return {"files": files, "counts": counts, "sensor": spec.name}


def split(dataset_dir: str | Path, out_path: str | Path, seed: int = 0,
          ratios=(0.7, 0.2, 0.1), group_by_point: bool = False) -> dict:
    data = _load_dataset_dir(dataset_dir)
    assignment = ds.split_dataset(data, ratios=tuple(ratios), seed=seed,
                                  group_by_point=group_by_point)
    ds.save_split(assignment, out_path)
    return {"files": [str(out_path)], "counts": assignment.counts()}


def fit_baseline(dataset_dir: str | Path, split_path: str | Path,
                 out_path: str | Path, k: int = 3) -> dict:
    data = _load_dataset_dir(dataset_dir)
    assignment = ds.load_split(split_path)
    model = pr.fit_baseline(data, assignment, k=k)
    pr.save_model(model, out_path)
    return {"files": [str(out_path)], "k": k, "n_train": len(model.train_ids)}


def predict(dataset_dir: str | Path, model_path: str | Path,
            out_path: str | Path) -> dict:
    data = _load_dataset_dir(dataset_dir)
    model = pr.load_model(model_path)
    preds = pr.predict(model, data)
    pr.save_predictions(preds, out_path)
    return {"files": [str(out_path)], "n_predictions": len(preds.sample_ids)}


def _norm_params(dataset_dir, split_path) -> ds.NormParams:
    data = _load_dataset_dir(dataset_dir)
    assignment = ds.load_split(split_path)
    return ds.fit_minmax(data, assignment)


def eval_calib(dataset_dir: str | Path, predictions_path: str | Path,
               split_path: str | Path, out_dir: str | Path,
               config: EvalConfig = EvalConfig()) -> dict:
    data = _load_dataset_dir(dataset_dir)
    assignment = ds.load_split(split_path)
    preds = pr.load_predictions(predictions_path, data)
    report = me.channel_report(data, preds, split=assignment, selector="test",
                               normalized=config.normalized_metrics)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    section = report.to_dict()
    _write_json(section, out / "calibration.json")
    return {"files": [str(out / "calibration.json")], "section": section}


def eval_sr(dataset_dir: str | Path, out_dir: str | Path,
            config: EvalConfig = EvalConfig(),
            pairs_path: str | Path | None = None) -> dict:
    """Fit the resolution classifier on the grating dataset's own split and
    score the held-out presses; with ``pairs_path`` skip fitting and curve an
    externally supplied sr_pairs.csv instead."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = []
    if pairs_path is None:
        data = _load_dataset_dir(dataset_dir)
        res = _load_resolutions(Path(dataset_dir) / "resolutions.csv", data)
        assignment = ds.split_dataset(data, seed=derive_seed(config.seed, "sr-split"))
        train_mask = assignment.mask(data, "train")
        test_mask = assignment.mask(data, "test")
        clf = pr.fit_resolution_classifier(
            data.features[train_mask], res[train_mask],
            expected_resolutions=np.unique(res))
        predicted = pr.classify_resolution(clf, data.features[test_mask])
        truth = res[test_mask]
        test_ids = [sid for sid, m in zip(data.sample_ids, test_mask) if m]
        pairs_file = out / "sr_pairs.csv"
        with open(pairs_file, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["sample_id", "true_res_mm", "pred_res_mm"])
            for sid, t, p in zip(test_ids, truth, predicted):
                writer.writerow([sid, repr(float(t)), repr(float(p))])
        files.append(str(pairs_file))
    else:
        truth, predicted = load_sr_pairs(pairs_path)
    curve = me.sr_curve(truth, predicted, config.sr_thresholds())
    section = curve.to_dict()
    _write_json(section, out / "sr.json")
    files.append(str(out / "sr.json"))
    return {"files": files, "section": section}


def _load_resolutions(path: Path, data: ds.SensorDataset) -> np.ndarray:
    by_id: dict[str, float] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["sample_id", "res_mm"]:
            raise SchemaError(f"{path}: expected header sample_id,res_mm")
        for row in reader:
            by_id[row[0]] = float(row[1])
    try:
        return np.array([by_id[sid] for sid in data.sample_ids])
    except KeyError as exc:
        raise SchemaError(f"{path}: missing resolution for sample {exc}") from None


def load_sr_pairs(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    truth, predicted = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["sample_id", "true_res_mm", "pred_res_mm"]:
            raise SchemaError(f"{path}: expected header sample_id,true_res_mm,pred_res_mm")
        for row in reader:
            if len(row) != 3:
                raise SchemaError(f"{path}: row with {len(row)} fields, expected 3")
            truth.append(float(row[1]))
            predicted.append(float(row[2]))
    t = me.check_lattice(truth, "true resolution")
    p = me.check_lattice(predicted, "predicted resolution")
    return t, p


def eval_sensitivity(dataset_dir: str | Path, out_dir: str | Path,
                     config: EvalConfig = EvalConfig()) -> dict:
    data = _load_dataset_dir(dataset_dir)
    smap = sp.sensitivity_map(
        data, f_min=config.f_min,
        bins_per_radius=config.sensitivity_bins_per_radius,
        min_occupancy=config.min_occupancy)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_heatmap_csv(smap, out / "heatmap.csv")
    save_svg(heatmap_svg(smap), out / "heatmap.svg")
    section = smap.to_dict()
    section["f_min"] = config.f_min
    _write_json(section, out / "sensitivity.json")
    return {"files": [str(out / "heatmap.csv"), str(out / "heatmap.svg"),
                      str(out / "sensitivity.json")],
            "section": section}


def eval_spatial(dataset_dir: str | Path, predictions_path: str | Path,
                 norm_dataset_dir: str | Path, norm_split_path: str | Path,
                 out_dir: str | Path, config: EvalConfig = EvalConfig()) -> dict:
    """Binned error series and spatial robustness per channel group over every
    sample of the given dataset; normalization comes from the calibration
    dataset/split the model was fitted on."""
    data = _load_dataset_dir(dataset_dir)
    preds = pr.load_predictions(predictions_path, data)
    norm = _norm_params(norm_dataset_dir, norm_split_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    results: dict[str, sp.SpatialRobustness] = {}
    csv_rows = []
    for group in ("Fxy", "Fz", "Pxy", "Pz"):
        dist = sp.binned_errors(data, preds, group, "radial_distance",
                                bin_width=config.bin_width, norm=norm,
                                normalized=config.normalized_metrics)
        depth = sp.binned_errors(data, preds, group, "normalized_depth",
                                 bin_width=config.bin_width, norm=norm,
                                 normalized=config.normalized_metrics)
        results[group] = sp.spatial_robustness(dist, depth,
                                               window=config.smoothing_window)
        for series in (dist, depth):
            smoothed = sp.smooth_series(series, config.smoothing_window)
            csv_rows.append((group, series, smoothed.bin_means))
    save_binseries_csv(csv_rows, out / "binseries.csv")
    section = spatial_section(results, config.bin_width, config.smoothing_window)
    _write_json(section, out / "spatial.json")
    return {"files": [str(out / "binseries.csv"), str(out / "spatial.json")],
            "section": section}


def eval_light(baseline_dataset_dir: str | Path, baseline_predictions: str | Path,
               split_path: str | Path,
               scenes: list[tuple[str, str, str]],
               out_dir: str | Path, config: EvalConfig = EvalConfig()) -> dict:
    """Scenes come as (scene_id, dataset_dir, predictions_path) triples; the
    baseline MAE/intensity is computed over the calibration test split."""
    data = _load_dataset_dir(baseline_dataset_dir)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if data.manifest.opaque:
        section = rb.opaque_light_section()
        _write_json(section, out / "light.json")
        return {"files": [str(out / "light.json")], "section": section}
    assignment = ds.load_split(split_path)
    norm = ds.fit_minmax(data, assignment)
    preds = pr.load_predictions(baseline_predictions, data)
    baseline = _scene_eval(sim.BASELINE_SCENE, data.subset(assignment.mask(data, "test")),
                           preds, norm, config)
    scene_evals = []
    for scene_id, scene_dir, scene_preds_path in scenes:
        scene_data = _load_dataset_dir(scene_dir)
        scene_preds = pr.load_predictions(scene_preds_path, scene_data)
        scene_evals.append(_scene_eval(scene_id, scene_data, scene_preds, norm, config))
    table = rb.light_report(baseline, scene_evals)
    save_light_csv(table, out / "light_report.csv")
    section = table.to_dict()
    _write_json(section, out / "light.json")
    return {"files": [str(out / "light_report.csv"), str(out / "light.json")],
            "section": section}


def _scene_eval(scene_id: str, data: ds.SensorDataset, preds,
                norm: ds.NormParams, config: EvalConfig) -> rb.SceneEval:
    report = me.channel_report(data, preds, split=None, selector=None, norm=norm,
                               normalized=config.normalized_metrics)
    return rb.SceneEval(
        scene_id=scene_id,
        intensity=rb.mean_intensity(data.intensity),
        mae_by_group={g: m.mae for g, m in report.groups.items()},
    )


def eval_repeat(dataset_dir: str | Path, predictions_path: str | Path,
                out_dir: str | Path, config: EvalConfig = EvalConfig()) -> dict:
    data = _load_dataset_dir(dataset_dir)
    preds = pr.load_predictions(predictions_path, data)
    groups = rb.extract_trial_groups(data, preds)
    supported = set(data.manifest.channels_supported)
    results: dict[str, rb.RepeatabilityResult] = {}
    skipped = []
    for group in rb.GROUP_NAMES:
        members = ds.CHANNEL_GROUPS[group]
        if not all(c in supported for c in members):
            skipped.append(group)
            continue
        results[group] = rb.repeatability(groups, group)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_repeatability_csv(results, out / "repeatability.csv",
                           out / "rep_depth_curve.csv")
    section = {
        "channels": {g: r.to_dict() for g, r in results.items()},
        "skipped_channels": skipped,
        "depth_step_mm": config.depth_step_mm,
    }
    _write_json(section, out / "repeatability.json")
    return {"files": [str(out / "repeatability.csv"),
                      str(out / "rep_depth_curve.csv"),
                      str(out / "repeatability.json")],
            "section": section}


def make_report(manifest_path: str | Path, eval_dir: str | Path,
                out_path: str | Path, config: EvalConfig = EvalConfig()) -> dict:
    """Assemble whatever section files exist under eval_dir into report.json."""
    manifest = ds.load_manifest(manifest_path)
    eval_d = Path(eval_dir)
    sections = {}
    for name, filename in (("calibration", "calibration.json"), ("sr", "sr.json"),
                           ("sensitivity", "sensitivity.json"),
                           ("spatial", "spatial.json"), ("light", "light.json"),
                           ("repeatability", "repeatability.json")):
        path = eval_d / filename
        if path.exists():
            sections[name] = json.loads(path.read_text(encoding="utf-8"))
    report = assemble_report(manifest.to_dict(), config.to_dict(), **sections)
    save_report(report, out_path)
    return {"files": [str(out_path)],
            "sections_present": sorted(sections),
            "sensor": report.sensor_name}


def make_radar(report_paths: list[str | Path], out_dir: str | Path,
               themes: list[str] | None = None) -> dict:
    reports = [load_report(p) for p in report_paths]
    rows = radar_table(reports, themes)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_radar_csv(rows, out / "radar.csv")
    save_svg(radar_svg(rows), out / "radar.svg")
    return {"files": [str(out / "radar.csv"), str(out / "radar.svg")],
            "n_sensors": len(reports),
            "themes": sorted({r.theme for r in rows})}
