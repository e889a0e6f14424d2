import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from survaug.errors import DataError, EmptyEvaluationError
from survaug.metrics import (
    COLUMNS,
    ConfusionCounts,
    MetricReport,
    aggregate,
    aggregate_by_category,
    binarize,
    compute_metrics,
    confusion,
    write_report_csv,
    write_report_json,
)

# Per-scene reference rows (FM, PWC, Recall, Precision, FPR, FNR, Sp) used as
# a consistency fixture for the aggregate arithmetic.
SBI_REFERENCE_ROWS = {
    "Board":          (0.9235, 4.3153, 0.9698, 0.8815, 0.0479, 0.0302, 0.9521),
    "CAVIAR1":        (0.9521, 0.3673, 0.9288, 0.9769, 0.0009, 0.0712, 0.9991),
    "CAVIAR2":        (0.9256, 0.0586, 0.9153, 0.9363, 0.0002, 0.0847, 0.9998),
    "CaVignal":       (0.8145, 3.7146, 0.9467, 0.7151, 0.0355, 0.0533, 0.9645),
    "Candela":        (0.8111, 1.2652, 0.9884, 0.6921, 0.0127, 0.0116, 0.9874),
    "HallAndMonitor": (0.9713, 0.1361, 0.9841, 0.9588, 0.0010, 0.0159, 0.9990),
    "Highway1":       (0.9439, 1.0731, 0.9757, 0.9142, 0.0093, 0.0243, 0.9907),
    "Highway2":       (0.9741, 0.1529, 0.9838, 0.9647, 0.0011, 0.0162, 0.9989),
    "HumanBody2":     (0.9525, 0.9608, 0.9571, 0.9480, 0.0059, 0.0429, 0.9941),
    "IBMtest2":       (0.9821, 0.1635, 0.9862, 0.9779, 0.0011, 0.0138, 0.9989),
    "PeopleAndFoliage": (0.6506, 28.6471, 0.9004, 0.5095, 0.3650, 0.0996, 0.6350),
}


def counts_from_rates(recall: float, precision: float, fpr: float,
                      positives: int = 1_000_000) -> ConfusionCounts:
    """Integer counts realizing the given rates to ~1e-6 (test oracle)."""
    tp = round(recall * positives)
    fn = positives - tp
    fp = round(tp * (1.0 - precision) / precision)
    neg = round(fp / fpr)
    return ConfusionCounts(tp=tp, fp=fp, fn=fn, tn=neg - fp)


def brute_force_confusion(pred, gt, weight=None):
    """Per-pixel Python tally, independent of the vectorized path."""
    tp = fp = fn = tn = 0
    flat_pred = np.asarray(pred).ravel().tolist()
    flat_gt = np.asarray(gt).ravel().tolist()
    flat_w = np.asarray(weight).ravel().tolist() if weight is not None \
        else [1] * len(flat_gt)
    for p, g, w in zip(flat_pred, flat_gt, flat_w):
        if w == 0 or g in (85, 170):
            continue
        gt_fg = g in (1, 255)
        pred_fg = p > 0
        if gt_fg and pred_fg:
            tp += 1
        elif gt_fg:
            fn += 1
        elif pred_fg:
            fp += 1
        else:
            tn += 1
    return ConfusionCounts(tp=tp, fp=fp, fn=fn, tn=tn)


class TestBinarize:
    def test_threshold_rule(self):
        out = binarize(np.array([0.49, 0.5, 0.51, 0.0, 1.0]))
        assert out.tolist() == [0, 0, 1, 0, 1]

    def test_all_zero_map(self):
        assert not binarize(np.zeros((4, 4))).any()

    def test_out_of_range(self):
        with pytest.raises(DataError):
            binarize(np.array([0.2, 1.2]))
        with pytest.raises(DataError):
            binarize(np.array([-0.1]))


class TestConfusion:
    def test_hand_count(self):
        pred = np.array([[1, 0], [0, 0]], dtype=np.uint8)
        gt = np.array([[1, 1], [0, 0]], dtype=np.uint8)
        c = confusion(pred, gt)
        assert (c.tp, c.fp, c.fn, c.tn) == (1, 0, 1, 2)

    def test_perfect_prediction(self):
        gt = np.array([[255, 0], [0, 255]], dtype=np.uint8)
        c = confusion(gt, gt)
        assert c.fp == 0 and c.fn == 0 and c.tp == 2 and c.tn == 2

    def test_ignore_and_unknown_excluded(self):
        gt = np.array([[255, 85], [170, 0]], dtype=np.uint8)
        pred = np.array([[1, 1], [1, 1]], dtype=np.uint8)
        c = confusion(pred, gt)
        assert c.total == 2
        assert (c.tp, c.fp) == (1, 1)

    def test_weight_mask_excludes(self):
        gt = np.array([[255, 0]], dtype=np.uint8)
        pred = np.array([[0, 1]], dtype=np.uint8)
        weight = np.array([[0, 1]], dtype=np.uint8)
        c = confusion(pred, gt, weight)
        assert (c.tp, c.fp, c.fn, c.tn) == (0, 1, 0, 0)

    def test_shape_mismatch(self):
        with pytest.raises(DataError):
            confusion(np.zeros((2, 2)), np.zeros((2, 3)))

    def test_matches_brute_force(self):
        rng = np.random.default_rng(42)
        for _ in range(50):
            pred = rng.integers(0, 2, (16, 16)).astype(np.uint8)
            gt = rng.choice([0, 85, 170, 255], (16, 16)).astype(np.uint8)
            assert confusion(pred, gt) == brute_force_confusion(pred, gt)

    def test_counts_sum_to_counted_pixels(self):
        rng = np.random.default_rng(7)
        gt = rng.choice([0, 85, 170, 255], (32, 32)).astype(np.uint8)
        pred = rng.integers(0, 2, (32, 32)).astype(np.uint8)
        c = confusion(pred, gt)
        assert c.total == int(np.count_nonzero((gt != 85) & (gt != 170)))


class TestComputeMetrics:
    def test_reference_row(self):
        c = counts_from_rates(recall=0.9698, precision=0.8815, fpr=0.0479)
        r = compute_metrics(c)
        assert r.fm == pytest.approx(0.9235, abs=5e-4)
        assert r.fnr == pytest.approx(0.0302, abs=1e-4)
        assert r.sp == pytest.approx(0.9521, abs=1e-4)
        assert r.recall == pytest.approx(0.9698, abs=1e-6)
        assert r.precision == pytest.approx(0.8815, abs=1e-6)

    def test_empty_frame_convention(self):
        r = compute_metrics(ConfusionCounts(tp=0, fp=0, fn=0, tn=100))
        assert r.fm == r.precision == r.recall == 1.0
        assert r.pwc == 0.0

    def test_gt_positive_pred_empty(self):
        r = compute_metrics(ConfusionCounts(tp=0, fp=0, fn=10, tn=90))
        assert r.precision == 0.0
        assert r.recall == 0.0
        assert r.fm == 0.0

    def test_pwc_half_wrong(self):
        r = compute_metrics(ConfusionCounts(tp=10, fp=30, fn=20, tn=40))
        assert r.pwc == pytest.approx(50.0)

    def test_all_zero_counts(self):
        with pytest.raises(EmptyEvaluationError):
            compute_metrics(ConfusionCounts())

    def test_negative_counts(self):
        with pytest.raises(DataError):
            compute_metrics(ConfusionCounts(tp=-1, tn=5))

    @given(st.tuples(
        st.integers(0, 10_000), st.integers(0, 10_000),
        st.integers(0, 10_000), st.integers(0, 10_000),
    ))
    def test_complement_invariants(self, quad):
        tp, fp, fn, tn = quad
        if tp + fp + fn + tn == 0:
            return
        r = compute_metrics(ConfusionCounts(tp=tp, fp=fp, fn=fn, tn=tn))
        assert r.fnr + r.recall == 1.0
        assert r.sp + r.fpr == 1.0
        assert math.isclose(r.pwc / 100.0 + (tp + tn) / (tp + fp + fn + tn), 1.0,
                            rel_tol=1e-12)
        if tp + fn and tp + fp:
            assert min(r.precision, r.recall) - 1e-12 <= r.fm <= max(r.precision, r.recall) + 1e-12

    @given(st.tuples(
        st.integers(0, 1000), st.integers(0, 1000),
        st.integers(0, 1000), st.integers(1, 1000),
    ))
    def test_fm_symmetric_under_pred_gt_swap(self, quad):
        tp, fp, fn, tn = quad
        a = compute_metrics(ConfusionCounts(tp=tp, fp=fp, fn=fn, tn=tn))
        b = compute_metrics(ConfusionCounts(tp=tp, fp=fn, fn=fp, tn=tn))
        # swapping pred and gt swaps FP and FN, exchanging P and R; the
        # harmonic mean is invariant, and P == R exactly when FP == FN
        assert a.fm == pytest.approx(b.fm, rel=1e-12)
        assert b.recall == pytest.approx(a.precision, rel=1e-12) or (tp == 0)
        if tp and (a.precision == a.recall) != (fp == fn):
            pytest.fail("P == R must coincide with FP == FN when TP > 0")

    def test_matches_brute_force_recomputation(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            pred = rng.integers(0, 2, (8, 8)).astype(np.uint8)
            gt = (rng.random((8, 8)) < 0.3).astype(np.uint8) * 255
            c = brute_force_confusion(pred, gt)
            if c.total == 0:
                continue
            r = compute_metrics(confusion(pred, gt))
            pos = c.tp + c.fn
            if pos:
                assert r.recall == pytest.approx(c.tp / pos)
            assert r.pwc == pytest.approx(100.0 * (c.fp + c.fn) / c.total)


class TestAggregate:
    def test_reference_column_mean(self):
        reports = [MetricReport(*row) for row in SBI_REFERENCE_ROWS.values()]
        avg = aggregate(reports)
        assert avg.fm == pytest.approx(0.9001, abs=5e-4)
        no_pf = [MetricReport(*row) for name, row in SBI_REFERENCE_ROWS.items()
                 if name != "PeopleAndFoliage"]
        assert aggregate(no_pf).fm == pytest.approx(0.9251, abs=5e-4)

    def test_reference_full_average_row(self):
        avg = aggregate([MetricReport(*row) for row in SBI_REFERENCE_ROWS.values()])
        expected = (0.9001, 3.7141, 0.9578, 0.8614, 0.0437, 0.0422, 0.9563)
        for got, want in zip(avg.as_row(), expected):
            assert got == pytest.approx(want, abs=5e-4)

    def test_single_report_is_identity(self):
        r = MetricReport(0.5, 1.0, 0.6, 0.7, 0.1, 0.4, 0.9)
        assert aggregate([r]) == r

    def test_empty_errors(self):
        with pytest.raises(DataError):
            aggregate([])

    def test_by_category(self):
        r1 = MetricReport(0.8, 1.0, 0.8, 0.8, 0.1, 0.2, 0.9)
        r2 = MetricReport(0.6, 3.0, 0.6, 0.6, 0.3, 0.4, 0.7)
        r3 = MetricReport(0.9, 0.5, 0.9, 0.9, 0.05, 0.1, 0.95)
        grouped = aggregate_by_category([("a", r1), ("a", r2), ("b", r3)])
        assert set(grouped) == {"a", "b"}
        assert grouped["a"].fm == pytest.approx(0.7)
        assert grouped["b"] == r3


class TestReportEmission:
    def test_csv_column_order_and_roundtrip(self, tmp_path):
        rows = [(name, MetricReport(*row)) for name, row in SBI_REFERENCE_ROWS.items()]
        avg = [("Average", aggregate([r for _, r in rows]))]
        csv_path = tmp_path / "report.csv"
        json_path = tmp_path / "report.json"
        write_report_csv(csv_path, rows, avg)
        write_report_json(json_path, rows, avg, categories={"Board": "indoor"})

        header = csv_path.read_text().splitlines()[0]
        assert header == "Scene," + ",".join(COLUMNS)
        assert not list(tmp_path.glob("*.tmp*"))

        import json as jsonlib
        doc = jsonlib.loads(json_path.read_text())
        assert doc["columns"] == list(COLUMNS)
        board = MetricReport.from_dict(doc["scenes"]["Board"])
        assert board.fm == pytest.approx(0.9235)
        assert doc["categories"] == {"Board": "indoor"}
