"""Lighting robustness across scenes and repeatability over repeated trials.

The lighting score relates the relative change in mean image intensity to the
relative change in prediction error; 1 means the error did not move despite a
lighting change, 0 means the error moved with no lighting change. Cells where
both are unchanged are reported as undefined, never silently 0 or 1.

Repeatability is the sample standard deviation of repeated predictions at a
fixed (point, depth), averaged over all points and depths.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import CHANNEL_GROUPS, LABEL_CHANNELS, SensorDataset
from .errors import (
    BaselineZero,
    EmptySet,
    InsufficientTrials,
    MissingPrediction,
    RaggedGroups,
    UndefinedRobustness,
)

SINGLE_CHANNELS = ("Px", "Py", "Pz", "Fx", "Fy", "Fz")
_CHANNEL_TO_COLUMN = dict(zip(SINGLE_CHANNELS, LABEL_CHANNELS))
GROUP_NAMES = ("Pxy", "Pz", "Fxy", "Fz")   # evaluation order of the channel groups


def light_robustness(mae_o: float, mae_c: float, i_o: float, i_c: float) -> float:
    """Intensity-change over (intensity-change + error-change), both relative
    to the original lighting condition."""
    if mae_o <= 0 or i_o <= 0:
        raise BaselineZero(f"baseline MAE ({mae_o}) and intensity ({i_o}) must be > 0")
    if mae_c < 0 or i_c < 0:
        raise ValueError("scene MAE/intensity must be non-negative")
    di = abs(i_c / i_o - 1.0)
    de = abs(mae_c / mae_o - 1.0)
    if di == 0.0 and de == 0.0:
        raise UndefinedRobustness(
            "scene matches baseline in both intensity and error (0/0)")
    return di / (di + de)


def mean_intensity(values) -> float:
    """Arithmetic mean grayscale intensity over a sample set."""
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise EmptySet("no samples to average intensity over")
    return float(np.mean(v))


@dataclass(frozen=True)
class SceneEval:
    """MAE per channel group and mean intensity for one lighting scene."""

    scene_id: str
    intensity: float
    mae_by_group: dict[str, float]


@dataclass(frozen=True)
class LightRow:
    scene_id: str
    group: str
    mae_baseline: float
    mae_scene: float
    intensity_baseline: float
    intensity_scene: float
    degradation_pct: float
    r_light: float | None      # None marks the undefined 0/0 cell

    @property
    def undefined(self) -> bool:
        return self.r_light is None

    def to_dict(self) -> dict:
        return {
            "scene_id": self.scene_id,
            "group": self.group,
            "mae_baseline": self.mae_baseline,
            "mae_scene": self.mae_scene,
            "intensity_baseline": self.intensity_baseline,
            "intensity_scene": self.intensity_scene,
            "degradation_pct": self.degradation_pct,
            "r_light": self.r_light,
        }


@dataclass
class LightTable:
    rows: list[LightRow]
    mean_degradation: dict[str, float]
    mean_r_light: dict[str, float | None]

    def to_dict(self) -> dict:
        return {
            "rows": [r.to_dict() for r in self.rows],
            "mean_degradation_pct": self.mean_degradation,
            "mean_r_light": self.mean_r_light,
            "excluded": False,
        }


def light_report(baseline: SceneEval, scenes: list[SceneEval]) -> LightTable:
    """Per-scene, per-group error degradation and robustness score, plus a
    per-group mean row over the scenes."""
    rows: list[LightRow] = []
    for scene in scenes:
        for group in GROUP_NAMES:
            mae_o = baseline.mae_by_group[group]
            mae_c = scene.mae_by_group[group]
            degradation = abs(mae_c / mae_o - 1.0) * 100.0
            try:
                score: float | None = light_robustness(
                    mae_o, mae_c, baseline.intensity, scene.intensity)
            except UndefinedRobustness:
                score = None
            rows.append(LightRow(
                scene_id=scene.scene_id, group=group,
                mae_baseline=mae_o, mae_scene=mae_c,
                intensity_baseline=baseline.intensity,
                intensity_scene=scene.intensity,
                degradation_pct=degradation, r_light=score))
    mean_degradation = {}
    mean_r_light: dict[str, float | None] = {}
    for group in GROUP_NAMES:
        cells = [r for r in rows if r.group == group]
        mean_degradation[group] = float(np.mean([r.degradation_pct for r in cells]))
        defined = [r.r_light for r in cells if r.r_light is not None]
        mean_r_light[group] = float(np.mean(defined)) if defined else None
    return LightTable(rows=rows, mean_degradation=mean_degradation,
                      mean_r_light=mean_r_light)


def opaque_light_section() -> dict:
    """Opaque sensors block external light: nominally perfect (score 1) but
    flagged excluded so reports never present the 1 as a measurement."""
    return {"excluded": True, "nominal_r_light": 1.0, "rows": [],
            "mean_degradation_pct": {}, "mean_r_light": {}}


# -- repeatability ----------------------------------------------------------------

@dataclass
class TrialGroup:
    """All repeated trials at one (probe point, depth step)."""

    point_id: int
    depth_step: int
    predictions: np.ndarray    # (N, 6)

    @property
    def n_trials(self) -> int:
        return self.predictions.shape[0]


@dataclass
class RepeatabilityResult:
    channel: str
    rep: float
    depth_curve: list[tuple[int, float]]   # (depth_step, mean STD across points)
    n_groups: int
    n_trials: int

    def to_dict(self) -> dict:
        return {
            "rep": self.rep,
            "depth_curve": [[d, v] for d, v in self.depth_curve],
            "n_groups": self.n_groups,
            "n_trials": self.n_trials,
        }


def extract_trial_groups(dataset: SensorDataset, preds) -> list[TrialGroup]:
    """Group predicted vectors by (point_id, depth_step), ordered by trial."""
    missing = [sid for sid in dataset.sample_ids if sid not in preds.id_index()]
    if missing:
        raise MissingPrediction(missing)
    values = preds.lookup(dataset.sample_ids)
    buckets: dict[tuple[int, int], list[tuple[int, int]]] = {}
    for i in range(dataset.n_samples):
        key = (int(dataset.point_ids[i]), int(dataset.depth_steps[i]))
        buckets.setdefault(key, []).append((int(dataset.trial_ids[i]), i))
    groups = []
    for (pid, dstep) in sorted(buckets):
        entries = sorted(buckets[(pid, dstep)])
        idx = [i for _, i in entries]
        groups.append(TrialGroup(point_id=pid, depth_step=dstep,
                                 predictions=values[idx]))
    return groups


def _channel_columns(channel: str) -> list[int]:
    if channel in _CHANNEL_TO_COLUMN:
        return [LABEL_CHANNELS.index(_CHANNEL_TO_COLUMN[channel])]
    if channel in CHANNEL_GROUPS:
        return [LABEL_CHANNELS.index(c) for c in CHANNEL_GROUPS[channel]]
    raise ValueError(f"unknown channel {channel!r}")


def repeatability(groups: list[TrialGroup], channel: str) -> RepeatabilityResult:
    """Mean over groups of the sample STD across trials.

    xy groups average the per-channel scores of their members (pooling the
    trials of both channels into one STD would fold the x/y offset into the
    spread and break translation invariance).
    """
    if not groups:
        raise EmptySet("no trial groups")
    n = groups[0].n_trials
    if any(g.n_trials != n for g in groups):
        sizes = sorted({g.n_trials for g in groups})
        raise RaggedGroups(f"groups disagree on trial count: {sizes}")
    if n < 2:
        raise InsufficientTrials(f"need >= 2 trials per group, got {n}")
    cols = _channel_columns(channel)
    stds = np.array([[np.std(g.predictions[:, c], ddof=1) for c in cols]
                     for g in groups])          # (n_groups, n_cols)
    per_group = stds.mean(axis=1)
    rep = float(per_group.mean())
    curve: dict[int, list[float]] = {}
    for g, value in zip(groups, per_group):
        curve.setdefault(g.depth_step, []).append(value)
    depth_curve = [(d, float(np.mean(v))) for d, v in sorted(curve.items())]
    return RepeatabilityResult(channel=channel, rep=rep, depth_curve=depth_curve,
                               n_groups=len(groups), n_trials=n)
