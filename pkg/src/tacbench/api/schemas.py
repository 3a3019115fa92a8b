"""Pydantic request/response models for the evaluation service."""
from __future__ import annotations

from pydantic import BaseModel, Field


# -- direct metric endpoints ----------------------------------------------------

class SeriesRequest(BaseModel):
    truth: list[float]
    prediction: list[float]


class CalibrationMetricsResponse(BaseModel):
    mae: float
    r2: float
    smape: float


class SrCurveRequest(BaseModel):
    true_res_mm: list[float]
    pred_res_mm: list[float]
    thresholds_mm: list[float]


class SrCurveResponse(BaseModel):
    thresholds: list[float]
    accuracy: list[float]
    n_pairs: int


class UniformityRequest(BaseModel):
    bin_means: list[float]


class UniformityResponse(BaseModel):
    mean_mu: float
    std_sigma: float
    uniformity_u: float


class LightRobustnessRequest(BaseModel):
    mae_baseline: float
    mae_scene: float
    intensity_baseline: float
    intensity_scene: float


class LightRobustnessResponse(BaseModel):
    r_light: float
    degradation_pct: float


class TrialGroupModel(BaseModel):
    point_id: int
    depth_step: int
    trials: list[list[float]]   # N x 6 predicted vectors


class RepeatabilityRequest(BaseModel):
    groups: list[TrialGroupModel]
    channel: str = "Pz"


class RepeatabilityResponse(BaseModel):
    channel: str
    rep: float
    depth_curve: list[tuple[int, float]]


# -- pipeline endpoints -----------------------------------------------------------

class StageResponse(BaseModel):
    files: list[str]
    summary: dict


class SimulateRequest(BaseModel):
    out_dir: str
    spec_path: str | None = None
    spec: dict | None = None     # inline spec overrides spec_path
    seed: int = 0
    protocols: list[str] = Field(
        default=["calibration", "spatial", "gratings", "repeatability", "scenes"])
    calibration_grid: int = 40
    depths_per_point: int = 4
    repeat_points: int = 100
    repeat_trials: int = 10
    scene_grid: int = 12
    scene_depths: int = 2
    grating_presses: int = 100


class SplitRequest(BaseModel):
    dataset_dir: str
    out_path: str
    seed: int = 0
    ratios: tuple[float, float, float] = (0.7, 0.2, 0.1)
    group_by_point: bool = False


class FitBaselineRequest(BaseModel):
    dataset_dir: str
    split_path: str
    out_path: str
    k: int = 3


class PredictRequest(BaseModel):
    dataset_dir: str
    model_path: str
    out_path: str


class ConfigModel(BaseModel):
    """Optional EvalConfig overrides carried by eval requests."""
    seed: int | None = None
    bin_width: float | None = None
    smoothing_window: int | None = None
    f_min: float | None = None
    sensitivity_bins_per_radius: int | None = None
    min_occupancy: int | None = None
    knn_k: int | None = None
    sr_threshold_max: float | None = None
    normalized_metrics: bool | None = None
    depth_step_mm: float | None = None

    def overrides(self) -> dict:
        return {k: v for k, v in self.model_dump().items() if v is not None}


class EvalCalibRequest(BaseModel):
    dataset_dir: str
    predictions_path: str
    split_path: str
    out_dir: str
    config: ConfigModel = ConfigModel()


class EvalSrRequest(BaseModel):
    out_dir: str
    dataset_dir: str | None = None
    pairs_path: str | None = None
    config: ConfigModel = ConfigModel()


class EvalSensitivityRequest(BaseModel):
    dataset_dir: str
    out_dir: str
    config: ConfigModel = ConfigModel()


class EvalSpatialRequest(BaseModel):
    dataset_dir: str
    predictions_path: str
    norm_dataset_dir: str
    norm_split_path: str
    out_dir: str
    config: ConfigModel = ConfigModel()


class SceneInput(BaseModel):
    scene_id: str
    dataset_dir: str
    predictions_path: str


class EvalLightRequest(BaseModel):
    baseline_dataset_dir: str
    baseline_predictions: str
    split_path: str
    scenes: list[SceneInput]
    out_dir: str
    config: ConfigModel = ConfigModel()


class EvalRepeatRequest(BaseModel):
    dataset_dir: str
    predictions_path: str
    out_dir: str
    config: ConfigModel = ConfigModel()


class ReportRequest(BaseModel):
    manifest_path: str
    eval_dir: str
    out_path: str
    config: ConfigModel = ConfigModel()


class RadarRequest(BaseModel):
    report_paths: list[str]
    out_dir: str
    themes: list[str] | None = None
