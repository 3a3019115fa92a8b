"""HTTP service exposing the metric suite and the pipeline stages.

Run standalone with ``tacbench serve`` (uvicorn) or mount in-process; the CLI
talks to this app over an in-process ASGI transport by default.
"""
from __future__ import annotations

import numpy as np
from fastapi import FastAPI
from fastapi.responses import JSONResponse

from .. import __version__
from .. import metrics as me
from .. import pipeline as pl
from .. import simulator as sim
from ..config import EvalConfig
from ..errors import TacbenchError
from ..robustness import TrialGroup, light_robustness, repeatability
from ..spatial import uniformity_stats
from . import schemas as sc


def _config(model: sc.ConfigModel) -> EvalConfig:
    return EvalConfig(**model.overrides())


def create_app() -> FastAPI:
    app = FastAPI(title="tacbench", version=__version__)

    @app.exception_handler(TacbenchError)
    async def _toolkit_error(request, exc: TacbenchError):
        return JSONResponse(
            status_code=422,
            content={"error": type(exc).__name__, "detail": str(exc)})

    @app.exception_handler(FileNotFoundError)
    async def _missing_file(request, exc: FileNotFoundError):
        return JSONResponse(status_code=422,
                            content={"error": "FileNotFound", "detail": str(exc)})

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "version": __version__}

    @app.get("/config/defaults")
    def config_defaults() -> dict:
        return EvalConfig().to_dict()

    # -- direct metric endpoints ------------------------------------------------

    @app.post("/metrics/calibration", response_model=sc.CalibrationMetricsResponse)
    def metrics_calibration(req: sc.SeriesRequest):
        return sc.CalibrationMetricsResponse(
            mae=me.mae(req.truth, req.prediction),
            r2=me.r_squared(req.truth, req.prediction),
            smape=me.smape(req.truth, req.prediction))

    @app.post("/metrics/sr-curve", response_model=sc.SrCurveResponse)
    def metrics_sr_curve(req: sc.SrCurveRequest):
        curve = me.sr_curve(req.true_res_mm, req.pred_res_mm, req.thresholds_mm)
        return sc.SrCurveResponse(thresholds=list(curve.thresholds),
                                  accuracy=list(curve.accuracy),
                                  n_pairs=curve.n_pairs)

    @app.post("/metrics/uniformity", response_model=sc.UniformityResponse)
    def metrics_uniformity(req: sc.UniformityRequest):
        mu, sigma, u = uniformity_stats(req.bin_means)
        return sc.UniformityResponse(mean_mu=mu, std_sigma=sigma, uniformity_u=u)

    @app.post("/metrics/light-robustness", response_model=sc.LightRobustnessResponse)
    def metrics_light(req: sc.LightRobustnessRequest):
        score = light_robustness(req.mae_baseline, req.mae_scene,
                                 req.intensity_baseline, req.intensity_scene)
        degradation = abs(req.mae_scene / req.mae_baseline - 1.0) * 100.0
        return sc.LightRobustnessResponse(r_light=score, degradation_pct=degradation)

    @app.post("/metrics/repeatability", response_model=sc.RepeatabilityResponse)
    def metrics_repeatability(req: sc.RepeatabilityRequest):
        groups = [TrialGroup(point_id=g.point_id, depth_step=g.depth_step,
                             predictions=np.array(g.trials, dtype=float))
                  for g in req.groups]
        result = repeatability(groups, req.channel)
        return sc.RepeatabilityResponse(channel=result.channel, rep=result.rep,
                                        depth_curve=result.depth_curve)

    # -- pipeline endpoints --------------------------------------------------------

    def _stage(summary: dict) -> sc.StageResponse:
        files = summary.pop("files", [])
        return sc.StageResponse(files=files, summary=summary)

    @app.post("/pipeline/simulate", response_model=sc.StageResponse)
    def pipeline_simulate(req: sc.SimulateRequest):
        if req.spec is not None:
            spec = sim.SimSensorSpec.from_dict(req.spec)
        elif req.spec_path is not None:
            spec = sim.load_simspec(req.spec_path)
        else:
            spec = sim.SimSensorSpec()
        return _stage(pl.simulate(
            spec, req.out_dir, seed=req.seed, protocols=tuple(req.protocols),
            calibration_grid=req.calibration_grid,
            depths_per_point=req.depths_per_point,
            repeat_points=req.repeat_points, repeat_trials=req.repeat_trials,
            scene_grid=req.scene_grid, scene_depths=req.scene_depths,
            grating_presses=req.grating_presses))

    @app.post("/pipeline/split", response_model=sc.StageResponse)
    def pipeline_split(req: sc.SplitRequest):
        return _stage(pl.split(req.dataset_dir, req.out_path, seed=req.seed,
                               ratios=req.ratios, group_by_point=req.group_by_point))

    @app.post("/pipeline/fit-baseline", response_model=sc.StageResponse)
    def pipeline_fit(req: sc.FitBaselineRequest):
        return _stage(pl.fit_baseline(req.dataset_dir, req.split_path,
                                      req.out_path, k=req.k))

    @app.post("/pipeline/predict", response_model=sc.StageResponse)
    def pipeline_predict(req: sc.PredictRequest):
        return _stage(pl.predict(req.dataset_dir, req.model_path, req.out_path))

    @app.post("/pipeline/eval/calib", response_model=sc.StageResponse)
    def pipeline_eval_calib(req: sc.EvalCalibRequest):
        return _stage(pl.eval_calib(req.dataset_dir, req.predictions_path,
                                    req.split_path, req.out_dir, _config(req.config)))

    @app.post("/pipeline/eval/sr", response_model=sc.StageResponse)
    def pipeline_eval_sr(req: sc.EvalSrRequest):
        return _stage(pl.eval_sr(req.dataset_dir, req.out_dir, _config(req.config),
                                 pairs_path=req.pairs_path))

    @app.post("/pipeline/eval/sensitivity", response_model=sc.StageResponse)
    def pipeline_eval_sensitivity(req: sc.EvalSensitivityRequest):
        return _stage(pl.eval_sensitivity(req.dataset_dir, req.out_dir,
                                          _config(req.config)))

    @app.post("/pipeline/eval/spatial", response_model=sc.StageResponse)
    def pipeline_eval_spatial(req: sc.EvalSpatialRequest):
        return _stage(pl.eval_spatial(req.dataset_dir, req.predictions_path,
                                      req.norm_dataset_dir, req.norm_split_path,
                                      req.out_dir, _config(req.config)))

    @app.post("/pipeline/eval/light", response_model=sc.StageResponse)
    def pipeline_eval_light(req: sc.EvalLightRequest):
        scenes = [(s.scene_id, s.dataset_dir, s.predictions_path) for s in req.scenes]
        return _stage(pl.eval_light(req.baseline_dataset_dir, req.baseline_predictions,
                                    req.split_path, scenes, req.out_dir,
                                    _config(req.config)))

    @app.post("/pipeline/eval/repeat", response_model=sc.StageResponse)
    def pipeline_eval_repeat(req: sc.EvalRepeatRequest):
        return _stage(pl.eval_repeat(req.dataset_dir, req.predictions_path,
                                     req.out_dir, _config(req.config)))

    @app.post("/pipeline/report", response_model=sc.StageResponse)
    def pipeline_report(req: sc.ReportRequest):
        return _stage(pl.make_report(req.manifest_path, req.eval_dir, req.out_path,
                                     _config(req.config)))

    @app.post("/pipeline/radar", response_model=sc.StageResponse)
    def pipeline_radar(req: sc.RadarRequest):
        return _stage(pl.make_radar(req.report_paths, req.out_dir, themes=req.themes))

    return app
