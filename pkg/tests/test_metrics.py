"""MAE / AP / mAP metric tests with hand-computed fixtures."""
import numpy as np
import pytest

from bodykit.errors import IdMismatch, MissingFold
from bodykit.measure import MEASUREMENT_NAMES
from bodykit import metrics
from bodykit.metrics import (
    PUBLISHED_REFERENCE_MAE_MM,
    ap_at,
    evaluate,
    evaluate_folds,
    mae,
    map_at,
    report_csv,
    report_text,
)


def sets_with_errors(errors_first_col):
    """Truth all-500mm; predictions offset by the given errors on column 0."""
    truth = {}
    preds = {}
    for i, e in enumerate(errors_first_col):
        sid = f"{i:03d}"
        t = np.full(16, 500.0)
        p = t.copy()
        p[0] += e
        truth[sid] = t
        preds[sid] = p
    return preds, truth


class TestMae:
    def test_perfect_predictions(self):
        preds, truth = sets_with_errors([0.0, 0.0])
        assert all(v == 0.0 for v in mae(preds, truth).values())

    def test_two_sample_average(self):
        preds, truth = sets_with_errors([2.0, -4.0])
        assert mae(preds, truth)[MEASUREMENT_NAMES[0]] == pytest.approx(3.0)

    def test_reference_constants(self):
        assert PUBLISHED_REFERENCE_MAE_MM["conv_grayscale"] == 4.64
        assert PUBLISHED_REFERENCE_MAE_MM["conv_binary"] == 7.60
        assert PUBLISHED_REFERENCE_MAE_MM["pointcloud_1024"] == 4.95
        assert PUBLISHED_REFERENCE_MAE_MM["pointcloud_512"] == 5.29

    def test_id_mismatch(self):
        preds, truth = sets_with_errors([1.0, 2.0])
        del preds["000"]
        preds["999"] = truth["001"]
        with pytest.raises(IdMismatch):
            mae(preds, truth)


class TestAp:
    def test_threshold_20(self):
        preds, truth = sets_with_errors([5.0, 9.0, 15.0, 25.0])
        assert ap_at(preds, truth, 20.0)[MEASUREMENT_NAMES[0]] == pytest.approx(75.0)

    def test_threshold_10(self):
        preds, truth = sets_with_errors([5.0, 9.0, 15.0, 25.0])
        assert ap_at(preds, truth, 10.0)[MEASUREMENT_NAMES[0]] == pytest.approx(50.0)

    def test_boundary_inclusive(self):
        preds, truth = sets_with_errors([20.0, 20.0])
        assert ap_at(preds, truth, 20.0)[MEASUREMENT_NAMES[0]] == pytest.approx(100.0)


class TestMap:
    def test_two_sample(self):
        # per-sample MAE over 16 measurements: 8/16 = 0.5 and 25x16/16 = 25
        truth = {"a": np.full(16, 500.0), "b": np.full(16, 500.0)}
        preds = {"a": truth["a"].copy(), "b": truth["b"] + 25.0}
        preds["a"][0] += 8.0 * 16.0  # sample mean error 8
        assert map_at(preds, truth, 20.0) == pytest.approx(50.0)

    def test_not_equal_to_mean_ap(self):
        # one measurement off by 32 mm: its AP@10 is 0, yet the sample's
        # mean error is 2 mm so mAP@10 still counts it
        truth = {"a": np.full(16, 500.0)}
        preds = {"a": truth["a"].copy()}
        preds["a"][0] += 32.0
        assert ap_at(preds, truth, 10.0)[MEASUREMENT_NAMES[0]] == 0.0
        assert map_at(preds, truth, 10.0) == 100.0

    def test_perfect(self):
        preds, truth = sets_with_errors([0.0, 0.0, 0.0])
        for t in (0.001, 1.0, 100.0):
            assert map_at(preds, truth, t) == 100.0

    def test_monotone_in_threshold(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            n = int(rng.integers(2, 30))
            truth = {str(i): rng.uniform(100, 900, size=16) for i in range(n)}
            preds = {k: v + rng.normal(0, 15, size=16) for k, v in truth.items()}
            ts = sorted(rng.uniform(1, 40, size=3))
            maps = [map_at(preds, truth, t) for t in ts]
            assert maps == sorted(maps)
            for name in MEASUREMENT_NAMES[:3]:
                aps = [ap_at(preds, truth, t)[name] for t in ts]
                assert aps == sorted(aps)

    def test_perfect_sample_never_decreases(self):
        rng = np.random.default_rng(1)
        truth = {str(i): rng.uniform(100, 900, size=16) for i in range(8)}
        preds = {k: v + rng.normal(0, 15, size=16) for k, v in truth.items()}
        before_ap = ap_at(preds, truth, 12.0)
        before_map = map_at(preds, truth, 12.0)
        truth["new"] = rng.uniform(100, 900, size=16)
        preds["new"] = truth["new"].copy()
        after_ap = ap_at(preds, truth, 12.0)
        assert map_at(preds, truth, 12.0) >= before_map
        for n in MEASUREMENT_NAMES:
            assert after_ap[n] >= before_ap[n]


class TestFolds:
    def _folded(self, fold_maes):
        truth = {}
        fold_ids = []
        preds_per_fold = {}
        for f, err in enumerate(fold_maes):
            ids = [f"{f}_{i}" for i in range(4)]
            fold_ids.append((str(f), ids))
            preds_per_fold[str(f)] = {}
            for sid in ids:
                truth[sid] = np.full(16, 500.0)
                preds_per_fold[str(f)][sid] = truth[sid] + err
        return truth, fold_ids, preds_per_fold

    def test_identical_folds_aggregate_equal(self):
        truth, fold_ids, preds = self._folded([3.0, 3.0, 3.0])
        reports, agg = evaluate_folds(truth, fold_ids, preds)
        for r in reports:
            assert r.mean_mae == pytest.approx(agg.mean_mae)

    def test_mean_of_fold_maes(self):
        truth, fold_ids, preds = self._folded([4.0, 6.0])
        _, agg = evaluate_folds(truth, fold_ids, preds)
        assert agg.mae[MEASUREMENT_NAMES[0]] == pytest.approx(5.0)

    def test_missing_fold(self):
        truth, fold_ids, preds = self._folded([4.0, 6.0])
        del preds["1"]
        with pytest.raises(MissingFold):
            evaluate_folds(truth, fold_ids, preds)

    def test_report_contains_all_rows_and_references(self):
        truth, fold_ids, preds = self._folded([4.0])
        _, agg = evaluate_folds(truth, fold_ids, preds)
        text = report_text(agg)
        for n in MEASUREMENT_NAMES:
            assert n.replace("_", " ") in text
        assert "Mean" in text
        assert "4.64" in text and "4.95" in text
        assert "not a" in text  # reference values are not desk-scale targets
        csv = report_csv(agg)
        assert len(csv.strip().splitlines()) == 18  # header + 16 + mean


class TestEvaluate:
    def test_report_shape(self):
        preds, truth = sets_with_errors([5.0, 12.0, 30.0])
        rep = evaluate(preds, truth, thresholds=(10.0, 20.0))
        assert rep.n_samples == 3
        assert set(rep.ap) == {10.0, 20.0}
        assert rep.map[20.0] == pytest.approx(100.0)  # per-sample means are tiny
