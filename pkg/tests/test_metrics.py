import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tacbench.dataset import NormParams, SensorDataset, normalize
from tacbench.errors import (
    EmptyPairs,
    MissingPrediction,
    OffLattice,
    SchemaError,
    ZeroVariance,
)
from tacbench.metrics import (
    channel_report,
    check_lattice,
    mae,
    r_squared,
    smape,
    sr_curve,
    stacked_group_series,
)
from tacbench.predictor import PredictionSet

from conftest import make_sample
from helpers import naive_mae, naive_r2, naive_smape, naive_sr

series = st.lists(st.floats(-100, 100), min_size=2, max_size=30)


class TestScalarMetrics:
    def test_mae_identity(self):
        assert mae([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == 0.0

    def test_mae_hand(self):
        assert abs(mae([1, 2, 3], [2, 2, 5]) - 1.0) < 1e-15

    def test_r2_perfect(self):
        assert r_squared([0, 1, 2], [0, 1, 2]) == 1.0

    def test_r2_mean_predictor(self):
        assert abs(r_squared([0, 1, 2], [1, 1, 1])) < 1e-15

    def test_r2_hand(self):
        assert abs(r_squared([0, 1, 2], [0, 1, 1]) - 0.5) < 1e-15

    def test_r2_zero_variance(self):
        with pytest.raises(ZeroVariance):
            r_squared([1.0, 1.0], [1.0, 2.0])

    def test_smape_identity(self):
        assert smape([1.0, 2.0], [1.0, 2.0]) == 0.0

    def test_smape_one_to_three(self):
        assert abs(smape([1.0], [3.0]) - 100.0) < 1e-6

    def test_smape_zero_zero(self):
        assert smape([0.0], [0.0]) == 0.0

    def test_length_mismatch(self):
        with pytest.raises(SchemaError):
            mae([1.0], [1.0, 2.0])

    def test_non_finite(self):
        with pytest.raises(SchemaError):
            smape([np.nan], [1.0])

    def test_oracle_equivalence_samples(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            n = int(rng.integers(2, 40))
            y = rng.uniform(-5, 5, n)
            p = y + rng.uniform(-1, 1, n)
            assert abs(mae(y, p) - naive_mae(list(y), list(p))) < 1e-12
            assert abs(smape(y, p) - naive_smape(list(y), list(p))) < 1e-12
            if np.std(y) > 0:
                assert abs(r_squared(y, p) - naive_r2(list(y), list(p))) < 1e-12


class TestMetricProperties:
    @given(series, series)
    @settings(max_examples=100, deadline=None)
    def test_mae_smape_symmetric(self, a, b):
        n = min(len(a), len(b))
        y, p = np.array(a[:n]), np.array(b[:n])
        assert abs(mae(y, p) - mae(p, y)) < 1e-12
        assert abs(smape(y, p) - smape(p, y)) < 1e-9

    @given(series, st.floats(0.1, 10.0))
    @settings(max_examples=100, deadline=None)
    def test_mae_scales_linearly(self, a, scale):
        y = np.array(a)
        p = y + 1.0
        assert abs(mae(scale * y, scale * p) - scale * mae(y, p)) < 1e-9 * max(1, scale)

    @given(st.lists(st.floats(0.5, 50), min_size=2, max_size=20), st.floats(0.1, 10.0))
    @settings(max_examples=100, deadline=None)
    def test_smape_scale_invariant(self, a, scale):
        y = np.array(a)
        p = y * 1.1 + 0.2
        assert abs(smape(scale * y, scale * p) - smape(y, p)) < 1e-5

    @given(st.lists(st.floats(-20, 20), min_size=3, max_size=20),
           st.floats(0.1, 5.0), st.floats(-10, 10))
    @settings(max_examples=100, deadline=None)
    def test_r2_affine_invariant(self, a, slope, intercept):
        y = np.array(a)
        if np.std(y) < 1e-3:
            return
        p = y + np.linspace(-1, 1, y.size)
        r_raw = r_squared(y, p)
        r_affine = r_squared(slope * y + intercept, slope * p + intercept)
        assert abs(r_raw - r_affine) < 1e-6 * max(1.0, abs(r_raw))


class TestChannelReport:
    def _preds(self, dataset, values, provenance="external"):
        return PredictionSet(sample_ids=list(dataset.sample_ids),
                             values=values, provenance=provenance)

    def test_perfect_predictions(self, small_dataset, full_split):
        preds = self._preds(small_dataset, small_dataset.labels.copy())
        report = channel_report(small_dataset, preds, split=full_split)
        for metrics in report.groups.values():
            assert metrics.mae == 0.0
            assert metrics.r2 == 1.0
            assert metrics.smape == 0.0

    def test_missing_prediction_lists_ids(self, small_dataset, full_split):
        keep = small_dataset.sample_ids[:-1]
        preds = PredictionSet(sample_ids=keep,
                              values=small_dataset.labels[:-1].copy())
        with pytest.raises(MissingPrediction) as err:
            channel_report(small_dataset, preds, split=full_split)
        assert small_dataset.sample_ids[-1] in err.value.sample_ids

    def test_matches_naive_oracle_on_toy_set(self, manifest):
        samples = [make_sample(i, manifest) for i in range(3)]
        data = SensorDataset.from_samples(manifest, samples)
        rng = np.random.default_rng(5)
        values = data.labels + rng.uniform(-0.05, 0.05, data.labels.shape)
        preds = self._preds(data, values)
        norm = NormParams(mins=(-1.0,) * 6, maxs=(30.0,) * 6)
        report = channel_report(data, preds, split=None, selector=None, norm=norm)
        truth_n = normalize(data.labels, norm)
        pred_n = normalize(values, norm)
        for group, cols in (("Fxy", (3, 4)), ("Fz", (5,)), ("Pxy", (0, 1)), ("Pz", (2,))):
            y = [truth_n[i, c] for c in cols for i in range(3)]
            p = [pred_n[i, c] for c in cols for i in range(3)]
            assert abs(report.groups[group].mae - naive_mae(y, p)) < 1e-12
            assert abs(report.groups[group].r2 - naive_r2(y, p)) < 1e-12
            assert abs(report.groups[group].smape - naive_smape(y, p)) < 1e-12

    def test_stacked_series_layout(self, small_dataset):
        labels = small_dataset.labels
        y, p = stacked_group_series(labels, labels + 1.0, "Pxy")
        assert y.size == 2 * small_dataset.n_samples
        np.testing.assert_array_equal(y[: small_dataset.n_samples], labels[:, 0])
        np.testing.assert_array_equal(y[small_dataset.n_samples:], labels[:, 1])


class TestSrCurve:
    def test_exact_pairs(self):
        res = np.repeat([0.25, 0.5, 1.75], 4)
        curve = sr_curve(res, res, [0.05, 0.5])
        assert curve.accuracy == (1.0, 1.0)

    def test_enumerated_errors(self):
        truth = np.array([0.50, 0.50, 0.50])
        pred = np.array([0.50, 0.55, 0.60])
        curve = sr_curve(truth, pred, [0.0, 0.05, 0.10])
        np.testing.assert_allclose(curve.accuracy, (1 / 3, 2 / 3, 1.0))

    def test_published_fine_tolerance_accuracy(self):
        # 99.0% of presses within one lattice step at the strictest tolerance
        truth = np.full(1000, 1.0)
        pred = truth.copy()
        pred[:10] += 0.15
        curve = sr_curve(truth, pred, [0.05])
        assert abs(curve.at(0.05) - 0.990) < 1e-12

    def test_empty_pairs(self):
        with pytest.raises(EmptyPairs):
            sr_curve([], [], [0.05])

    def test_threshold_lattice_enforced(self):
        with pytest.raises(OffLattice):
            sr_curve([0.25], [0.25], [0.03])

    def test_check_lattice_ok(self):
        check_lattice([0.25, 1.75, 0.05])

    def test_monotone_and_saturating(self):
        rng = np.random.default_rng(3)
        lattice = np.round(0.25 + 0.05 * np.arange(31), 10)
        thresholds = [round(0.05 * i, 10) for i in range(0, 36)]
        for _ in range(30):
            n = int(rng.integers(1, 200))
            truth = rng.choice(lattice, n)
            pred = rng.choice(lattice, n)
            curve = sr_curve(truth, pred, thresholds)
            acc = np.array(curve.accuracy)
            assert np.all(np.diff(acc) >= 0)
            for t, a in zip(curve.thresholds, curve.accuracy):
                if t >= 1.5:
                    assert a == 1.0
                assert abs(a - naive_sr(truth, pred, t)) < 1e-12


class TestMetricErrorPaths:
    def test_channel_report_needs_norm_source(self, small_dataset):
        preds = PredictionSet(sample_ids=list(small_dataset.sample_ids),
                              values=small_dataset.labels.copy())
        with pytest.raises(SchemaError):
            channel_report(small_dataset, preds, split=None, selector=None)

    def test_sr_length_mismatch(self):
        with pytest.raises(SchemaError):
            sr_curve([0.25, 0.3], [0.25], [0.05])

    def test_sr_thresholds_must_ascend(self):
        with pytest.raises(SchemaError):
            sr_curve([0.25], [0.25], [0.1, 0.05])
