import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from tacbench.dataset import (
    ProbeSample,
    SensorDataset,
    SensorManifest,
    SplitAssignment,
)


@pytest.fixture
def manifest():
    return SensorManifest(
        sensor_name="unit", camera_resolution_mp=1.0, gel_thickness_mm=5.0,
        fov_mm2=300.0, fps_hz=30.0, max_depth_mm=3.5, max_force_n=0.7,
        center_x_mm=20.0, center_y_mm=20.0, max_radius_mm=17.0)


def make_sample(i, manifest, **overrides):
    base = dict(
        sample_id=f"u{i:04d}", point_id=i, trial_id=0, depth_step=0,
        px_mm=manifest.center_x_mm + 0.1 * i,
        py_mm=manifest.center_y_mm - 0.07 * i,
        pz_mm=min(0.05 * i, manifest.max_depth_mm),
        fx_n=0.01 * i, fy_n=-0.01 * i,
        fz_n=min(0.01 * i, manifest.max_force_n),
        intensity=100.0, scene_id="base",
        features=np.array([0.1 * i, 1.0 - 0.1 * i, 0.5]),
    )
    base.update(overrides)
    return ProbeSample(**base)


@pytest.fixture
def small_dataset(manifest):
    samples = [make_sample(i, manifest) for i in range(10)]
    return SensorDataset.from_samples(manifest, samples)


@pytest.fixture
def full_split(small_dataset):
    assignment = {}
    for i, sid in enumerate(small_dataset.sample_ids):
        assignment[sid] = "train" if i < 6 else ("val" if i < 8 else "test")
    return SplitAssignment(assignment=assignment, seed=0)


ACCEPTANCE_RESULTS: list[tuple[str, str]] = []


def record_acceptance(name: str, outcome: str) -> None:
    ACCEPTANCE_RESULTS.append((name, outcome))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when != "call" or not item.name.startswith("test_criterion"):
        return
    label = item.name.replace("test_", "")
    record_acceptance(label, "PASS" if report.passed else "FAIL")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{outcome}  {name}")
