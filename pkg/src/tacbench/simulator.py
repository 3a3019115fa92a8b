"""Virtual tactile sensor and robotic protocol engine.

The sensor is defined analytically so every downstream metric has a
closed-form oracle: ground-truth labels carry no noise at all, and every
stochastic term (feature noise, trial noise, scene effects) is drawn from
seeded generators, making protocol runs byte-reproducible.

Force law: Fz = depth / S(x, y) with S(x, y) = S0 * (1 + beta * (r/r_max)^2),
so the sensitivity field is exactly recoverable from emitted samples. A
Hertzian variant (F proportional to depth^1.5) exists to stress-test the
low-force exclusion of the sensitivity map.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .config import derive_seed
from .dataset import ProbeSample, SensorDataset, SensorManifest, radial_distance
from .errors import OffLattice, OutOfSurface, SafeLimitExceeded, UnknownScene
from .metrics import check_lattice
from .predictor import PredictionSet

BASELINE_SCENE = "base"
GRATING_RESOLUTIONS = tuple(round(0.25 + 0.05 * i, 10) for i in range(31))  # 0.25..1.75 mm


@dataclass(frozen=True)
class SimSensorSpec:
    """Parameters of the virtual sensor; doubles as the analytic oracle."""

    name: str = "simdome"
    rng_seed: int = 20240
    feature_dim: int = 16
    dome_radius_mm: float = 40.0        # 0 = flat surface
    center_x_mm: float = 25.0
    center_y_mm: float = 25.0
    max_radius_mm: float = 17.0
    max_depth_mm: float = 3.5
    max_force_n: float = 0.7
    s0_mm_per_n: float = 5.0            # sensitivity at the center
    beta: float = 1.0                   # radial growth of sensitivity
    shear_gamma: float = 0.2            # N per mm lateral offset per N normal force
    feature_noise: float = 0.01
    trial_noise: float = 0.02           # prediction-equivalent noise, oracle mode
    base_intensity: float = 20.0
    scene_gains: dict = field(default_factory=lambda: {
        BASELINE_SCENE: 1.0, "S1": 1.5, "S2": 2.0, "S3": 1.0, "S4": 7.0})
    scene_noise_factors: dict = field(default_factory=lambda: {
        BASELINE_SCENE: 1.0, "S1": 2.0, "S2": 2.5, "S3": 1.5, "S4": 4.0})
    edge_distortion: float = 0.0        # feature-noise inflation beyond edge_threshold
    edge_threshold: float = 0.8
    grating_blur: float = 0.0           # contrast loss of fine gratings
    force_law: str = "linear"           # or "hertzian"
    camera_resolution_mp: float = 0.9
    gel_thickness_mm: float = 5.0
    fov_mm2: float = 1257.0
    fps_hz: float = 30.0
    opaque: bool = False

    def __post_init__(self):
        if self.scene_gains.get(BASELINE_SCENE) != 1.0:
            raise ValueError("baseline scene gain must be 1.0")
        if self.s0_mm_per_n <= 0:
            raise ValueError("s0_mm_per_n must be positive")
        if min(self.feature_noise, self.trial_noise) < 0:
            raise ValueError("noise levels must be >= 0")
        if self.force_law not in ("linear", "hertzian"):
            raise ValueError(f"unknown force law {self.force_law!r}")
        if self.dome_radius_mm and self.dome_radius_mm < self.max_radius_mm:
            raise ValueError("dome radius must be >= sensing radius")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "SimSensorSpec":
        known = set(cls.__dataclass_fields__)
        return cls(**{k: v for k, v in data.items() if k in known})

    def manifest(self) -> SensorManifest:
        return SensorManifest(
            sensor_name=self.name,
            camera_resolution_mp=self.camera_resolution_mp,
            gel_thickness_mm=self.gel_thickness_mm,
            fov_mm2=self.fov_mm2,
            fps_hz=self.fps_hz,
            max_depth_mm=self.max_depth_mm,
            max_force_n=self.max_force_n,
            center_x_mm=self.center_x_mm,
            center_y_mm=self.center_y_mm,
            max_radius_mm=self.max_radius_mm,
            opaque=self.opaque,
        )


def load_simspec(path: str | Path) -> SimSensorSpec:
    with open(path, encoding="utf-8") as fh:
        return SimSensorSpec.from_dict(json.load(fh))


def save_simspec(spec: SimSensorSpec, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(spec.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


class VirtualSensor:
    """A simulated sensor instance: spec + scene + deterministic RNG state."""

    def __init__(self, spec: SimSensorSpec, scene_id: str = BASELINE_SCENE):
        if scene_id not in spec.scene_gains:
            raise UnknownScene(f"scene {scene_id!r} not in spec.scene_gains")
        self.spec = spec
        self.scene_id = scene_id
        self.rng = np.random.default_rng(derive_seed(spec.rng_seed, f"sensor-{scene_id}"))
        # Fixed random projection shared by every protocol of this spec so a
        # model fitted on one dataset transfers to the others.
        basis_rng = np.random.default_rng(derive_seed(spec.rng_seed, "embedding"))
        raw = basis_rng.normal(size=(spec.feature_dim, max(spec.feature_dim, 5)))
        q, _ = np.linalg.qr(raw)
        self._projection = q[:, :5]                      # (F, 5) orthonormal columns
        grating_rng = np.random.default_rng(derive_seed(spec.rng_seed, "grating-basis"))
        raw_g = grating_rng.normal(size=(spec.feature_dim, max(spec.feature_dim, 3)))
        qg, _ = np.linalg.qr(raw_g)
        self._grating_basis = qg[:, :3]                  # res axis + two yaw axes

    # -- geometry -------------------------------------------------------------

    def _radial(self, x: float, y: float) -> float:
        return float(np.hypot(x - self.spec.center_x_mm, y - self.spec.center_y_mm))

    def surface_height(self, x: float, y: float) -> float:
        """Analytic surface height above the rim plane."""
        r = self._radial(x, y)
        if r > self.spec.max_radius_mm:
            raise OutOfSurface(f"({x}, {y}) is {r:.2f} mm from center, "
                               f"beyond radius {self.spec.max_radius_mm}")
        rd = self.spec.dome_radius_mm
        if rd == 0:
            return 0.0
        return float(np.sqrt(rd ** 2 - r ** 2)
                     - np.sqrt(rd ** 2 - self.spec.max_radius_mm ** 2))

    def sensitivity_at(self, x: float, y: float) -> float:
        r_norm = self._radial(x, y) / self.spec.max_radius_mm
        return self.spec.s0_mm_per_n * (1.0 + self.spec.beta * r_norm ** 2)

    def surface_probe(self, x: float, y: float, step: float = 0.1) -> float:
        """Descend in fixed steps until at or below the surface; the returned
        contact height is within one step of the analytic height."""
        h = self.surface_height(x, y)
        apex = self.surface_height(self.spec.center_x_mm, self.spec.center_y_mm)
        z = apex + 1.0
        while z > h:
            z -= step
        return z

    # -- indentation -----------------------------------------------------------

    def force_for_depth(self, x: float, y: float, depth: float) -> float:
        s = self.sensitivity_at(x, y)
        if self.spec.force_law == "hertzian":
            return depth ** 1.5 / s
        return depth / s

    def depth_for_force(self, x: float, y: float, force: float) -> float:
        s = self.sensitivity_at(x, y)
        if self.spec.force_law == "hertzian":
            return (force * s) ** (2.0 / 3.0)
        return force * s

    def clamp_depth(self, x: float, y: float, depth: float) -> float:
        depth = min(depth, self.spec.max_depth_mm)
        if self.force_for_depth(x, y, depth) > self.spec.max_force_n:
            depth = self.depth_for_force(x, y, self.spec.max_force_n)
        return depth

    def indent(self, x: float, y: float, depth: float,
               lateral_offset: tuple[float, float] = (0.0, 0.0),
               scene_id: str | None = None,
               clamp: bool = True,
               rng: np.random.Generator | None = None,
               sample_id: str = "s0", point_id: int = 0, trial_id: int = 0,
               depth_step: int = 0) -> ProbeSample:
        """One indentation: exact labels, noisy features, scene intensity."""
        scene = self.scene_id if scene_id is None else scene_id
        if scene not in self.spec.scene_gains:
            raise UnknownScene(f"scene {scene!r} not in spec.scene_gains")
        ox, oy = lateral_offset
        px, py = x + ox, y + oy     # the displacement moves the contact point
        self.surface_height(px, py)  # raises OutOfSurface
        if clamp:
            depth = self.clamp_depth(px, py, depth)
        else:
            if depth > self.spec.max_depth_mm:
                raise SafeLimitExceeded(
                    f"depth {depth} exceeds max_depth {self.spec.max_depth_mm}")
            if self.force_for_depth(px, py, depth) > self.spec.max_force_n:
                raise SafeLimitExceeded(
                    f"force {self.force_for_depth(px, py, depth):.3f} exceeds "
                    f"max_force {self.spec.max_force_n}")
        fz = self.force_for_depth(px, py, depth)
        fx, fy = self.spec.shear_gamma * fz * ox, self.spec.shear_gamma * fz * oy
        features = self._embed(px, py, depth, ox, oy)
        rng = self.rng if rng is None else rng
        sigma = self._feature_sigma(px, py, scene)
        if sigma > 0:
            features = features + rng.normal(0.0, sigma, size=features.shape)
        return ProbeSample(
            sample_id=sample_id, point_id=point_id, trial_id=trial_id,
            depth_step=depth_step, px_mm=px, py_mm=py, pz_mm=depth,
            fx_n=fx, fy_n=fy, fz_n=fz,
            intensity=self.spec.base_intensity * self.spec.scene_gains[scene],
            scene_id=scene, features=features,
        )

    def _feature_sigma(self, px: float, py: float, scene: str) -> float:
        sigma = self.spec.feature_noise * self.spec.scene_noise_factors.get(scene, 1.0)
        r_norm = self._radial(px, py) / self.spec.max_radius_mm
        if r_norm > self.spec.edge_threshold:
            sigma *= 1.0 + self.spec.edge_distortion
        return sigma

    def _embed(self, px: float, py: float, depth: float, ox: float, oy: float) -> np.ndarray:
        u = np.array([
            (px - self.spec.center_x_mm) / self.spec.max_radius_mm,
            (py - self.spec.center_y_mm) / self.spec.max_radius_mm,
            depth / self.spec.max_depth_mm,
            ox, oy,
        ])
        return self._projection @ u


def apply_scene(sensor: VirtualSensor, scene_id: str) -> VirtualSensor:
    """Sensor variant operating under a different lighting scene."""
    return VirtualSensor(sensor.spec, scene_id=scene_id)


# -- protocols -------------------------------------------------------------------

def _grid_points(spec: SimSensorSpec, n: int, margin: float = 0.95) -> list[tuple[float, float]]:
    # n x n grid over the largest square inscribed in the sensing disc.
    half = margin * spec.max_radius_mm / np.sqrt(2.0)
    xs = np.linspace(spec.center_x_mm - half, spec.center_x_mm + half, n)
    ys = np.linspace(spec.center_y_mm - half, spec.center_y_mm + half, n)
    return [(float(x), float(y)) for y in ys for x in xs]


def run_calibration_protocol(sensor: VirtualSensor, grid_n: int = 40,
                             depths_per_point: int = 4, seed: int = 0,
                             id_prefix: str = "c") -> SensorDataset:
    """Two-stage probing over an n x n grid.

    Stage 1 steps down in 0.1 mm increments to find contact (emitted as a
    zero-depth sample); stage 2 performs ``depths_per_point`` indentations to
    depths drawn uniformly over the admissible range, each with a small
    random lateral displacement so shear responses are represented.
    """
    rng = np.random.default_rng(derive_seed(seed, "calibration"))
    samples: list[ProbeSample] = []
    counter = 0
    for point_id, (x, y) in enumerate(_grid_points(sensor.spec, grid_n)):
        sensor.surface_probe(x, y, step=0.1)
        samples.append(sensor.indent(
            x, y, 0.0, rng=rng, sample_id=f"{id_prefix}{counter:06d}",
            point_id=point_id, trial_id=0, depth_step=0))
        counter += 1
        for d in range(1, depths_per_point + 1):
            offset = tuple(rng.uniform(-0.4, 0.4, size=2))
            depth_cap = sensor.clamp_depth(x + offset[0], y + offset[1],
                                           sensor.spec.max_depth_mm)
            depth = float(rng.uniform(0.0, depth_cap))
            samples.append(sensor.indent(
                x, y, depth, lateral_offset=offset, rng=rng,
                sample_id=f"{id_prefix}{counter:06d}", point_id=point_id,
                trial_id=0, depth_step=d))
            counter += 1
    return SensorDataset.from_samples(sensor.spec.manifest(), samples)


def run_repeatability_protocol(sensor: VirtualSensor, k_points: int = 100,
                               n_trials: int = 10, depth_step_mm: float = 0.1,
                               seed: int = 0) -> SensorDataset:
    """K random surface points, pressed in fixed depth steps, N trials each.

    Full retraction between trials is modeled as an independent feature-noise
    draw per trial; positions and depths repeat exactly.
    """
    rng = np.random.default_rng(derive_seed(seed, "repeatability"))
    spec = sensor.spec
    n_depths = int(np.floor(spec.max_depth_mm / depth_step_mm + 1e-9))
    samples: list[ProbeSample] = []
    counter = 0
    for point_id in range(k_points):
        # Rejection-free uniform draw over the disc (sqrt radius law).
        r = 0.9 * spec.max_radius_mm * np.sqrt(rng.uniform())
        theta = rng.uniform(0.0, 2.0 * np.pi)
        x = spec.center_x_mm + r * np.cos(theta)
        y = spec.center_y_mm + r * np.sin(theta)
        for d in range(1, n_depths + 1):
            depth = sensor.clamp_depth(x, y, d * depth_step_mm)
            for trial in range(n_trials):
                samples.append(sensor.indent(
                    x, y, depth, rng=rng, sample_id=f"r{counter:06d}",
                    point_id=point_id, trial_id=trial, depth_step=d))
                counter += 1
    return SensorDataset.from_samples(spec.manifest(), samples)


GRATING_NOISE_BASE = 0.003   # press-to-press feature noise along the resolution axis
GRATING_YAW_AMPLITUDE = 0.05


def run_grating_protocol(sensor: VirtualSensor,
                         resolutions=GRATING_RESOLUTIONS,
                         presses_per_board: int = 100,
                         seed: int = 0) -> tuple[SensorDataset, np.ndarray]:
    """Press each grating board repeatedly under varying yaw.

    Features place each board on a one-dimensional resolution axis with small
    yaw-dependent components; grating_blur degrades the contrast-to-noise of
    fine boards the way low effective pixel density does, so classification
    confuses ever coarser neighborhoods as blur grows. Returns (dataset,
    resolution labels aligned to the dataset rows).
    """
    res = check_lattice(resolutions)
    if np.any(res < 0.25 - 1e-9) or np.any(res > 1.75 + 1e-9):
        raise OffLattice("resolutions outside the 0.25..1.75 mm grating range")
    rng = np.random.default_rng(derive_seed(seed, "gratings"))
    spec = sensor.spec
    e_res, e_c, e_s = (sensor._grating_basis[:, i] for i in range(3))
    press_depth = min(0.5, 0.5 * spec.max_depth_mm)
    samples: list[ProbeSample] = []
    labels: list[float] = []
    counter = 0
    for class_idx, r_mm in enumerate(res):
        fineness = (1.75 - r_mm) / 1.5          # 1 for the finest grating
        sigma = GRATING_NOISE_BASE * (1.0 + spec.grating_blur * fineness)
        for press in range(presses_per_board):
            yaw = rng.uniform(0.0, 2.0 * np.pi)
            noise = rng.normal()
            features = (e_res * (r_mm - 1.0 + sigma * noise)
                        + GRATING_YAW_AMPLITUDE
                        * (e_c * np.cos(yaw) + e_s * np.sin(yaw)))
            fz = sensor.force_for_depth(spec.center_x_mm, spec.center_y_mm, press_depth)
            samples.append(ProbeSample(
                sample_id=f"g{counter:06d}", point_id=class_idx, trial_id=press,
                depth_step=0, px_mm=spec.center_x_mm, py_mm=spec.center_y_mm,
                pz_mm=press_depth, fx_n=0.0, fy_n=0.0, fz_n=fz,
                intensity=spec.base_intensity * spec.scene_gains[sensor.scene_id],
                scene_id=sensor.scene_id, features=features))
            labels.append(float(r_mm))
            counter += 1
    return SensorDataset.from_samples(spec.manifest(), samples), np.array(labels)


def oracle_predictions(dataset: SensorDataset, sigma: float, seed: int,
                       edge_inflation: float = 0.0,
                       edge_threshold: float = 0.8) -> PredictionSet:
    """Diagnostic prediction set: exact labels plus i.i.d. Gaussian noise.

    Bypasses any model so repeatability/spatial oracles have closed form;
    ``edge_inflation`` scales the noise to sigma*(1+edge_inflation) for
    samples beyond the normalized radius threshold.
    """
    rng = np.random.default_rng(derive_seed(seed, "oracle-predictions"))
    noise = rng.normal(0.0, 1.0, size=dataset.labels.shape)
    scale = np.full(dataset.n_samples, sigma)
    if edge_inflation:
        r = radial_distance(dataset.channel("px_mm"), dataset.channel("py_mm"),
                            dataset.manifest, warn=False)
        scale = scale * (1.0 + edge_inflation * (r > edge_threshold))
    return PredictionSet(sample_ids=list(dataset.sample_ids),
                         values=dataset.labels + noise * scale[:, None],
                         provenance="baseline")
