import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tacbench.dataset import (
    LABEL_CHANNELS,
    NormParams,
    SensorDataset,
    SensorManifest,
    denormalize,
    fit_minmax,
    load_dataset,
    load_split,
    normalize,
    radial_distance,
    save_dataset,
    save_split,
    split_dataset,
    validate_dataset,
)
from tacbench.errors import (
    DegenerateChannel,
    DuplicateSampleId,
    EmptySplit,
    MissingColumn,
    SafeLimitViolation,
    SchemaError,
)

from conftest import make_sample


class TestManifest:
    def test_rejects_nonpositive_fields(self, manifest):
        with pytest.raises(SchemaError):
            SensorManifest(**{**manifest.to_dict(), "fps_hz": 0.0,
                              "channels_supported": LABEL_CHANNELS})

    def test_missing_key(self, manifest):
        data = manifest.to_dict()
        del data["max_depth_mm"]
        with pytest.raises(MissingColumn):
            SensorManifest.from_dict(data)

    def test_optional_keys_round_trip(self, manifest):
        data = manifest.to_dict()
        data["opaque"] = True
        data["channels_supported"] = ["pz_mm", "fz_n"]
        m = SensorManifest.from_dict(data)
        assert m.opaque and m.channels_supported == ("pz_mm", "fz_n")


class TestLoadSave:
    def test_round_trip_lossless(self, small_dataset, tmp_path):
        paths = save_dataset(small_dataset, tmp_path)
        loaded = load_dataset(paths["manifest"], paths["samples"])
        assert loaded.sample_ids == small_dataset.sample_ids
        np.testing.assert_array_equal(loaded.labels, small_dataset.labels)
        np.testing.assert_array_equal(loaded.features, small_dataset.features)
        np.testing.assert_array_equal(loaded.intensity, small_dataset.intensity)
        # second save is byte-identical
        second = tmp_path / "again"
        save_dataset(loaded, second)
        assert (second / "samples.csv").read_bytes() == Path(paths["samples"]).read_bytes()
        assert (second / "manifest.json").read_bytes() == Path(paths["manifest"]).read_bytes()

    def test_ten_rows(self, small_dataset, tmp_path):
        paths = save_dataset(small_dataset, tmp_path)
        assert load_dataset(paths["manifest"], paths["samples"]).n_samples == 10

    def test_duplicate_sample_id(self, manifest, tmp_path):
        samples = [make_sample(0, manifest), make_sample(1, manifest, sample_id="u0000")]
        data = SensorDataset.from_samples(manifest, samples)
        paths = save_dataset(data, tmp_path)
        with pytest.raises(DuplicateSampleId):
            load_dataset(paths["manifest"], paths["samples"])

    def test_safe_limit_violation(self, manifest, tmp_path):
        # manifest caps depth at 3.5 mm; a 4.0 mm sample must be rejected
        samples = [make_sample(0, manifest), make_sample(1, manifest, pz_mm=4.0)]
        data = SensorDataset.from_samples(manifest, samples)
        paths = save_dataset(data, tmp_path)
        with pytest.raises(SafeLimitViolation):
            load_dataset(paths["manifest"], paths["samples"])
        violations = validate_dataset(data)
        assert len(violations) == 1 and violations[0].code == "SafeLimitViolation"

    def test_missing_column(self, small_dataset, tmp_path):
        paths = save_dataset(small_dataset, tmp_path)
        text = Path(paths["samples"]).read_text().replace("depth_step,", "")
        bad = tmp_path / "bad.csv"
        bad.write_text(text)
        with pytest.raises(MissingColumn):
            load_dataset(paths["manifest"], bad)

    def test_compliant_samples_accepted(self, manifest):
        # every sample within limits passes validation by construction
        samples = [make_sample(i, manifest) for i in range(30)]
        assert validate_dataset(SensorDataset.from_samples(manifest, samples)) == []


class TestNormalization:
    def test_fit_extremes(self, manifest):
        samples = [make_sample(i, manifest, fz_n=v)
                   for i, v in enumerate([0.0, 0.35, 0.7])]
        data = SensorDataset.from_samples(manifest, samples)
        split = split_dataset(data, seed=0)
        split.assignment = {sid: "train" for sid in data.sample_ids}
        params = fit_minmax(data, split)
        fz = LABEL_CHANNELS.index("fz_n")
        assert params.mins[fz] == 0.0 and params.maxs[fz] == 0.7

    def test_degenerate_channel(self, manifest):
        samples = [make_sample(i, manifest, fz_n=0.5, pz_mm=0.5) for i in range(4)]
        data = SensorDataset.from_samples(manifest, samples)
        split = split_dataset(data, seed=0)
        split.assignment = {sid: "train" for sid in data.sample_ids}
        with pytest.raises(DegenerateChannel):
            fit_minmax(data, split)

    def test_out_of_range_value_not_clamped(self):
        # train {1, 2, 3} -> params (1, 3); a test value 5 normalizes to 2.0
        params = NormParams(mins=(1.0,) * 6, maxs=(3.0,) * 6)
        v = normalize(np.full(6, 5.0), params)
        np.testing.assert_allclose(v, 2.0)

    def test_min_to_zero_max_to_one(self):
        params = NormParams(mins=tuple(range(6)), maxs=tuple(v + 2.0 for v in range(6)))
        np.testing.assert_array_equal(normalize(np.array(params.mins), params), 0.0)
        np.testing.assert_array_equal(normalize(np.array(params.maxs), params), 1.0)

    def test_fz_midpoint(self):
        params = NormParams(mins=(0.0,) * 6, maxs=(0.7,) * 6)
        assert abs(normalize(np.full(6, 0.35), params)[5] - 0.5) < 1e-12

    @given(st.lists(st.floats(-10, 10), min_size=6, max_size=6))
    @settings(max_examples=100, deadline=None)
    def test_round_trip_identity(self, values):
        params = NormParams(mins=(-11.0,) * 6, maxs=(11.0,) * 6)
        v = np.array(values)
        np.testing.assert_allclose(denormalize(normalize(v, params), params), v,
                                   atol=1e-12)


class TestSplit:
    def test_counts_10(self, small_dataset):
        split = split_dataset(small_dataset, seed=7)
        assert split.counts() == {"train": 7, "val": 2, "test": 1}

    def test_deterministic(self, small_dataset):
        a = split_dataset(small_dataset, seed=7)
        b = split_dataset(small_dataset, seed=7)
        assert a.assignment == b.assignment

    def test_seed_changes_assignment(self, small_dataset):
        a = split_dataset(small_dataset, seed=7)
        b = split_dataset(small_dataset, seed=8)
        assert a.assignment != b.assignment

    @given(st.integers(10, 200), st.integers(0, 1000))
    @settings(max_examples=50, deadline=None)
    def test_proportions_within_one_sample(self, n, seed):
        manifest = SensorManifest(
            sensor_name="unit", camera_resolution_mp=1.0, gel_thickness_mm=5.0,
            fov_mm2=300.0, fps_hz=30.0, max_depth_mm=3.5, max_force_n=0.7,
            center_x_mm=20.0, center_y_mm=20.0, max_radius_mm=17.0)
        samples = [make_sample(i, manifest) for i in range(n)]
        data = SensorDataset.from_samples(manifest, samples)
        counts = split_dataset(data, seed=seed).counts()
        for name, ratio in zip(("train", "val", "test"), (0.7, 0.2, 0.1)):
            assert abs(counts[name] - n * ratio) <= 1.0

    def test_group_by_point_no_straddle(self, manifest):
        samples = []
        i = 0
        for point in range(5):
            for trial in range(4):
                samples.append(make_sample(i, manifest, point_id=point,
                                           trial_id=trial))
                i += 1
        data = SensorDataset.from_samples(manifest, samples)
        split = split_dataset(data, seed=3, group_by_point=True)
        for point in range(5):
            names = {split.assignment[sid]
                     for sid, pid in zip(data.sample_ids, data.point_ids)
                     if pid == point}
            assert len(names) == 1
        assert all(v > 0 for v in split.counts().values())

    def test_empty_split_error(self, manifest):
        samples = [make_sample(i, manifest) for i in range(2)]
        data = SensorDataset.from_samples(manifest, samples)
        with pytest.raises(EmptySplit):
            split_dataset(data, seed=0)

    def test_save_load_round_trip(self, small_dataset, tmp_path):
        split = split_dataset(small_dataset, seed=7)
        path = tmp_path / "split.csv"
        save_split(split, path)
        assert load_split(path).assignment == split.assignment


class TestRadialDistance:
    def test_center_is_zero(self, manifest):
        assert radial_distance(manifest.center_x_mm, manifest.center_y_mm, manifest) == 0.0

    def test_rim_is_one(self, manifest):
        r = radial_distance(manifest.center_x_mm + manifest.max_radius_mm,
                            manifest.center_y_mm, manifest)
        assert abs(r - 1.0) < 1e-12

    def test_half_radius(self, manifest):
        # 17 mm radius sensor probed 8.5 mm off-center sits exactly halfway
        assert manifest.max_radius_mm == 17.0
        r = radial_distance(manifest.center_x_mm + 8.5, manifest.center_y_mm, manifest)
        assert abs(r - 0.5) < 1e-12

    def test_clamps_and_warns(self, manifest):
        with pytest.warns(RuntimeWarning):
            r = radial_distance(
                np.array([manifest.center_x_mm + 2 * manifest.max_radius_mm]),
                np.array([manifest.center_y_mm]), manifest)
        assert r[0] == 1.0


class TestImagePathDataset:
    def test_round_trip(self, manifest, tmp_path):
        samples = [make_sample(i, manifest, features=None,
                               image_path=f"frames/{i:03d}.png")
                   for i in range(4)]
        data = SensorDataset.from_samples(manifest, samples)
        assert data.features is None
        paths = save_dataset(data, tmp_path)
        header = Path(paths["samples"]).read_text().splitlines()[0]
        assert header.endswith("scene_id,image_path")
        loaded = load_dataset(paths["manifest"], paths["samples"])
        assert loaded.image_paths == [f"frames/{i:03d}.png" for i in range(4)]


class TestLoaderErrorPaths:
    def test_empty_table(self, manifest, tmp_path):
        save_manifest_path = tmp_path / "manifest.json"
        from tacbench.dataset import save_manifest
        save_manifest(manifest, save_manifest_path)
        empty = tmp_path / "samples.csv"
        empty.write_text("")
        with pytest.raises(SchemaError):
            load_dataset(save_manifest_path, empty)

    def test_row_width_mismatch(self, small_dataset, tmp_path):
        paths = save_dataset(small_dataset, tmp_path)
        lines = Path(paths["samples"]).read_text().splitlines()
        lines[1] = lines[1] + ",0.5"
        bad = tmp_path / "bad.csv"
        bad.write_text("\n".join(lines) + "\n")
        with pytest.raises(SchemaError):
            load_dataset(paths["manifest"], bad)

    def test_columns_out_of_order(self, small_dataset, tmp_path):
        paths = save_dataset(small_dataset, tmp_path)
        text = Path(paths["samples"]).read_text()
        text = text.replace("sample_id,point_id", "point_id,sample_id", 1)
        bad = tmp_path / "bad.csv"
        bad.write_text(text)
        with pytest.raises(SchemaError):
            load_dataset(paths["manifest"], bad)

    def test_misnamed_feature_columns(self, small_dataset, tmp_path):
        paths = save_dataset(small_dataset, tmp_path)
        text = Path(paths["samples"]).read_text().replace("feature_1", "feat_1", 1)
        bad = tmp_path / "bad.csv"
        bad.write_text(text)
        with pytest.raises(SchemaError):
            load_dataset(paths["manifest"], bad)

    def test_negative_depth_rejected(self, manifest):
        samples = [make_sample(0, manifest), make_sample(1, manifest, pz_mm=-0.2)]
        violations = validate_dataset(SensorDataset.from_samples(manifest, samples))
        assert [v.code for v in violations] == ["SafeLimitViolation"]

    def test_intensity_range_rejected(self, manifest):
        samples = [make_sample(0, manifest, intensity=300.0)]
        violations = validate_dataset(SensorDataset.from_samples(manifest, samples))
        assert violations and "intensity" in violations[0].message

    def test_duplicate_probe_key_rejected(self, manifest):
        samples = [make_sample(0, manifest),
                   make_sample(1, manifest, point_id=0, trial_id=0, depth_step=0)]
        violations = validate_dataset(SensorDataset.from_samples(manifest, samples))
        assert violations and "point_id" in violations[0].message

    def test_unknown_channels_supported(self, manifest):
        data = manifest.to_dict()
        data["channels_supported"] = ["torque"]
        with pytest.raises(SchemaError):
            SensorManifest.from_dict(data)

    def test_bad_split_file(self, tmp_path):
        bad = tmp_path / "split.csv"
        bad.write_text("sample_id,split\na,validation\n")
        with pytest.raises(SchemaError):
            load_split(bad)

    def test_group_by_point_needs_three_points(self, manifest):
        samples = [make_sample(i, manifest, point_id=i % 2) for i in range(8)]
        data = SensorDataset.from_samples(manifest, samples)
        with pytest.raises(EmptySplit):
            split_dataset(data, seed=0, group_by_point=True)
