"""Spatial analyses over the sensor surface.

Sensitivity per sample is indentation depth per unit normal force (mm/N);
maps bin it over (x, y). Binned error series over normalized radial distance
or depth feed the spatial-robustness score: the mean of the two sample
standard deviations of (smoothed) bin means.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import (
    NormParams,
    SensorDataset,
    normalize,
    normalized_depth,
    radial_distance,
)
from .errors import MissingPrediction, NoIncludedSamples, TooFewBins, ZeroMean
from .metrics import stacked_group_series

DEFAULT_F_MIN = 0.05        # N; below this the depth/force ratio is unreliable
DEFAULT_BIN_WIDTH = 0.01    # normalized units
DEFAULT_WINDOW = 5          # rolling-mean bins
DEFAULT_MIN_OCCUPANCY = 3

BIN_AXES = ("radial_distance", "normalized_depth")


def sensitivity(pz, fz, f_min: float = DEFAULT_F_MIN) -> np.ndarray:
    """Per-sample sensitivity Pz/|Fz| in mm/N.

    Samples with |Fz| < f_min are excluded (NaN), not zeroed: the ratio is
    singular as force vanishes.
    """
    pz_a, fz_a = np.broadcast_arrays(np.asarray(pz, dtype=float),
                                     np.abs(np.asarray(fz, dtype=float)))
    out = np.full(pz_a.shape, np.nan)
    np.divide(pz_a, fz_a, out=out, where=fz_a >= f_min)
    return out


@dataclass
class SensitivityMap:
    """Mean sensitivity over square (x, y) bins, plus dispersion statistics."""

    grid: np.ndarray          # (ny, nx), NaN where unoccupied
    occupancy: np.ndarray     # (ny, nx) int
    x_edges: np.ndarray
    y_edges: np.ndarray
    mean_mu: float
    std_sigma: float
    uniformity_u: float
    min_occupancy: int
    n_excluded: int

    def occupied_means(self) -> np.ndarray:
        mask = self.occupancy >= self.min_occupancy
        return self.grid[mask]

    def to_dict(self) -> dict:
        return {
            "mean_mu": self.mean_mu,
            "std_sigma": self.std_sigma,
            "uniformity_u": self.uniformity_u,
            "occupied_bins": int(np.count_nonzero(self.occupancy >= self.min_occupancy)),
            "min_occupancy": self.min_occupancy,
            "n_excluded": self.n_excluded,
            "grid_shape": list(self.grid.shape),
        }


def uniformity_stats(bin_means) -> tuple[float, float, float]:
    """(mu, sigma, U) over bin means; U = 1 / (1 + sigma/|mu|) in (0, 1]."""
    means = np.asarray(bin_means, dtype=float).ravel()
    if means.size < 2:
        raise TooFewBins(f"uniformity needs >= 2 occupied bins, got {means.size}")
    mu = float(np.mean(means))
    if mu == 0.0:
        raise ZeroMean("mean sensitivity is zero; uniformity undefined")
    sigma = float(np.std(means, ddof=1))
    return mu, sigma, 1.0 / (1.0 + sigma / abs(mu))


def uniformity(smap: SensitivityMap) -> float:
    return uniformity_stats(smap.occupied_means())[2]


def sensitivity_map(dataset: SensorDataset,
                    f_min: float = DEFAULT_F_MIN,
                    bins_per_radius: int = 10,
                    min_occupancy: int = DEFAULT_MIN_OCCUPANCY) -> SensitivityMap:
    """Bin per-sample sensitivities over the sensor plane.

    The grid covers the square [center - R, center + R]^2 with square bins of
    side R / bins_per_radius. Bins under ``min_occupancy`` stay on the grid
    but are left out of mu/sigma/U.
    """
    m = dataset.manifest
    s = sensitivity(dataset.channel("pz_mm"), dataset.channel("fz_n"), f_min)
    included = ~np.isnan(s)
    if not included.any():
        raise NoIncludedSamples(f"no sample reaches |Fz| >= {f_min} N")
    n_bins = 2 * bins_per_radius
    x_edges = np.linspace(m.center_x_mm - m.max_radius_mm,
                          m.center_x_mm + m.max_radius_mm, n_bins + 1)
    y_edges = np.linspace(m.center_y_mm - m.max_radius_mm,
                          m.center_y_mm + m.max_radius_mm, n_bins + 1)
    x = dataset.channel("px_mm")[included]
    y = dataset.channel("py_mm")[included]
    v = s[included]
    ix = np.clip(np.searchsorted(x_edges, x, side="right") - 1, 0, n_bins - 1)
    iy = np.clip(np.searchsorted(y_edges, y, side="right") - 1, 0, n_bins - 1)
    flat = iy * n_bins + ix
    counts = np.bincount(flat, minlength=n_bins * n_bins)
    sums = np.bincount(flat, weights=v, minlength=n_bins * n_bins)
    occupancy = counts.reshape(n_bins, n_bins)
    with np.errstate(invalid="ignore"):
        grid = np.where(occupancy > 0, sums.reshape(n_bins, n_bins) / occupancy, np.nan)
    mu, sig, u = uniformity_stats(grid[occupancy >= min_occupancy])
    return SensitivityMap(grid=grid, occupancy=occupancy, x_edges=x_edges,
                          y_edges=y_edges, mean_mu=mu, std_sigma=sig,
                          uniformity_u=u, min_occupancy=min_occupancy,
                          n_excluded=int(np.count_nonzero(~included)))


# -- binned error series -------------------------------------------------------

@dataclass
class BinSeries:
    """Mean absolute error per bin along one normalized analysis axis."""

    axis: str
    bin_width: float
    bin_centers: np.ndarray
    bin_means: np.ndarray     # NaN where empty
    bin_counts: np.ndarray

    def occupied(self) -> np.ndarray:
        return self.bin_counts > 0

    def occupied_means(self) -> np.ndarray:
        return self.bin_means[self.occupied()]


def rolling_mean(values, window: int) -> np.ndarray:
    """Centered moving average; the window truncates at the series edges
    (index i averages values[max(0, i-h) : i+h+1], h = window // 2)."""
    if window < 1 or window % 2 == 0:
        raise ValueError(f"window must be odd and >= 1, got {window}")
    v = np.asarray(values, dtype=float)
    if window == 1 or v.size <= 1:
        return v.copy()
    h = window // 2
    out = np.empty_like(v)
    for i in range(v.size):
        out[i] = v[max(0, i - h): i + h + 1].mean()
    return out


def smooth_series(series: BinSeries, window: int) -> BinSeries:
    """Rolling-mean over the occupied bins (empty bins carry no signal and
    are skipped rather than treated as zeros); counts are preserved."""
    occ = series.occupied()
    smoothed = np.full_like(series.bin_means, np.nan)
    smoothed[occ] = rolling_mean(series.bin_means[occ], window)
    return BinSeries(axis=series.axis, bin_width=series.bin_width,
                     bin_centers=series.bin_centers, bin_means=smoothed,
                     bin_counts=series.bin_counts.copy())


def binned_errors(dataset: SensorDataset, preds, group: str,
                  axis: str, bin_width: float = DEFAULT_BIN_WIDTH,
                  norm: NormParams | None = None,
                  normalized: bool = True) -> BinSeries:
    """Per-bin MAE of one channel group along radial distance or depth.

    For the xy groups both residuals of a sample land in the sample's bin, so
    the count-weighted mean of bin means reconciles exactly with the stacked
    global MAE.
    """
    if axis not in BIN_AXES:
        raise ValueError(f"axis must be one of {BIN_AXES}, got {axis!r}")
    missing = [sid for sid in dataset.sample_ids if sid not in preds.id_index()]
    if missing:
        raise MissingPrediction(missing)
    truth = dataset.labels
    pred_values = preds.lookup(dataset.sample_ids)
    if normalized:
        if norm is None:
            raise ValueError("normalized binned errors need explicit norm params")
        truth = normalize(truth, norm)
        pred_values = normalize(pred_values, norm)
    y, p = stacked_group_series(truth, pred_values, group)
    errors = np.abs(y - p)

    m = dataset.manifest
    if axis == "radial_distance":
        coord = radial_distance(dataset.channel("px_mm"), dataset.channel("py_mm"), m)
    else:
        coord = normalized_depth(dataset.channel("pz_mm"), m)
    repeat = errors.size // dataset.n_samples
    coord = np.tile(np.asarray(coord, dtype=float), repeat)

    n_bins = int(np.ceil(round(1.0 / bin_width, 9)))
    idx = np.clip(np.floor(coord / bin_width).astype(int), 0, n_bins - 1)
    counts = np.bincount(idx, minlength=n_bins)
    sums = np.bincount(idx, weights=errors, minlength=n_bins)
    with np.errstate(invalid="ignore"):
        means = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
    centers = (np.arange(n_bins) + 0.5) * bin_width
    return BinSeries(axis=axis, bin_width=bin_width, bin_centers=centers,
                     bin_means=means, bin_counts=counts)


@dataclass
class SpatialRobustness:
    """Combined distance/depth variability of bin-mean errors for one group."""

    value: float
    dist_std: float
    depth_std: float
    window: int
    dist_series: BinSeries | None = None
    depth_series: BinSeries | None = None

    def to_dict(self) -> dict:
        return {
            "r_spatial": self.value,
            "dist_std": self.dist_std,
            "depth_std": self.depth_std,
            "window": self.window,
        }


def spatial_robustness(dist_series: BinSeries, depth_series: BinSeries,
                       window: int = DEFAULT_WINDOW) -> SpatialRobustness:
    """Half the sum of the sample standard deviations of the two smoothed
    bin-mean series."""
    stds = []
    smoothed = []
    for series in (dist_series, depth_series):
        means = smooth_series(series, window).occupied_means()
        if means.size < 2:
            raise TooFewBins(
                f"{series.axis}: need >= 2 occupied bins, got {means.size}")
        stds.append(float(np.std(means, ddof=1)))
        smoothed.append(means)
    return SpatialRobustness(value=0.5 * (stds[0] + stds[1]),
                             dist_std=stds[0], depth_std=stds[1],
                             window=window,
                             dist_series=dist_series, depth_series=depth_series)
