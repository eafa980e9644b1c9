"""Identity metrics: hand-computed goldens, continuity-aware matching,
switch/fragmentation bookkeeping, and input validation."""

import math

import pytest

from croptrack import Box, MetricsReport, evaluate, match_frame

BOX = Box(100.0, 100.0, 50.0, 50.0)
FAR = Box(900.0, 900.0, 50.0, 50.0)


def test_perfect_tracking():
    frames = [[(1, BOX), (2, FAR)] for _ in range(10)]
    report = evaluate(frames, frames)
    assert report.mota == 1.0
    assert report.idf1 == 1.0
    assert report.idp == 1.0
    assert report.idr == 1.0
    assert report.idsw == 0
    assert report.frag == 0
    assert report.gt_count == 20
    assert report.fp_count == 0
    assert report.fn_count == 0


def test_golden_identity_split():
    """One object tracked 10 frames; the predicted id changes at frame 6.

    Expected: 1 switch, no fragmentation, MOTA 0.9; the global id matching
    can claim at most 5 frames for either predicted id, so IDF1 is
    2*5 / (10 + 10) = 0.5.
    """
    gt = [[(1, BOX)] for _ in range(10)]
    pred = [[(1 if f < 5 else 2, BOX)] for f in range(10)]
    report = evaluate(gt, pred)
    assert report.idsw == 1
    assert report.frag == 0
    assert report.mota == pytest.approx(0.9)
    assert report.idf1 == pytest.approx(0.5)
    assert report.idp == pytest.approx(0.5)
    assert report.idr == pytest.approx(0.5)
    assert report.fp_count == 0
    assert report.fn_count == 0


def test_golden_coverage_gap():
    """One object tracked 10 frames; the prediction is absent in frames 5-6
    and resumes with the same id.

    Expected: no switch, 1 fragmentation, 2 misses, MOTA 0.8,
    IDF1 = 2*8 / (10 + 8) = 8/9.
    """
    gt = [[(1, BOX)] for _ in range(10)]
    pred = [[] if f in (4, 5) else [(1, BOX)] for f in range(10)]
    report = evaluate(gt, pred)
    assert report.idsw == 0
    assert report.frag == 1
    assert report.fn_count == 2
    assert report.fp_count == 0
    assert report.mota == pytest.approx(0.8)
    assert report.idf1 == pytest.approx(8.0 / 9.0)


def test_golden_false_positive_only():
    gt = [[(1, BOX)] for _ in range(10)]
    pred = [list(frame) for frame in gt]
    pred[3] = [(1, BOX), (99, FAR)]
    report = evaluate(gt, pred)
    assert report.fp_count == 1
    assert report.fn_count == 0
    assert report.idsw == 0
    assert report.mota == pytest.approx(0.9)
    assert report.idf1 == pytest.approx(20.0 / 21.0)


def test_switch_across_gap_counts_switch_and_frag():
    gt = [[(1, BOX)] for _ in range(6)]
    pred = [
        [(1, BOX)],
        [(1, BOX)],
        [(1, BOX)],
        [],
        [(2, BOX)],
        [(2, BOX)],
    ]
    report = evaluate(gt, pred)
    assert report.idsw == 1
    assert report.frag == 1
    assert report.fn_count == 1


def test_carryover_keeps_identities_through_a_crossing():
    """When two predictions swap relative positions but both still overlap
    their previous objects above threshold, the established pairings are
    kept, so no switches are charged."""

    def row(x):
        return Box(x, 0.0, 10.0, 10.0)

    gt = [
        [(1, row(0.0)), (2, row(20.0))],
        [(1, row(0.0)), (2, row(1.0))],
        [(1, row(0.0)), (2, row(20.0))],
    ]
    pred = [
        [(7, row(0.0)), (8, row(20.0))],
        # Fresh optimal matching here would swap (7 sits exactly on gt 2).
        [(7, row(1.0)), (8, row(0.0))],
        [(7, row(0.0)), (8, row(20.0))],
    ]
    report = evaluate(gt, pred)
    assert report.idsw == 0
    assert report.fn_count == 0
    assert report.fp_count == 0


def test_empty_ground_truth_with_predictions():
    report = evaluate([[]], [[(1, BOX)]])
    assert report.mota == -math.inf
    assert report.fp_count == 1
    assert report.idf1 == 0.0


def test_everything_empty():
    report = evaluate([[], []], [[], []])
    assert report.mota == 1.0
    assert report.idf1 == 1.0
    assert report.gt_count == 0


def test_miss_without_any_prediction():
    report = evaluate([[(1, BOX)]], [[]])
    assert report.fn_count == 1
    assert report.mota == 0.0
    assert report.idf1 == 0.0


def test_low_overlap_is_not_a_match():
    # Offset 6 of width 10: IoU = 4/16 = 0.25 < 0.5.
    gt = [[(1, Box(0.0, 0.0, 10.0, 10.0))]]
    pred = [[(1, Box(6.0, 0.0, 10.0, 10.0))]]
    report = evaluate(gt, pred)
    assert report.fn_count == 1
    assert report.fp_count == 1
    report = evaluate(gt, pred, iou_threshold=0.25)
    assert report.fn_count == 0
    assert report.fp_count == 0


def test_duplicate_ids_rejected():
    with pytest.raises(ValueError, match="ground-truth"):
        evaluate([[(1, BOX), (1, FAR)]], [[]])
    with pytest.raises(ValueError, match="prediction"):
        evaluate([[]], [[(3, BOX), (3, FAR)]])


def test_frame_count_mismatch_rejected():
    with pytest.raises(ValueError, match="frame ranges differ"):
        evaluate([[], []], [[]])


def test_threshold_validation():
    with pytest.raises(ValueError):
        evaluate([[]], [[]], iou_threshold=0.0)
    with pytest.raises(ValueError):
        evaluate([[]], [[]], iou_threshold=1.5)
    assert evaluate([[(1, BOX)]], [[(1, BOX)]], iou_threshold=1.0).mota == 1.0


def test_match_frame_pairs_by_overlap():
    gt = [(1, Box(0.0, 0.0, 10.0, 10.0)), (2, Box(100.0, 0.0, 10.0, 10.0))]
    pred = [(5, Box(101.0, 0.0, 10.0, 10.0)), (6, Box(1.0, 0.0, 10.0, 10.0))]
    assert sorted(match_frame(gt, pred)) == [(0, 1), (1, 0)]
    assert match_frame([], pred) == []
    assert match_frame(gt, []) == []
    with pytest.raises(ValueError):
        match_frame(gt, pred, iou_threshold=0.0)


def test_as_dict_keys():
    report = evaluate([[(1, BOX)]], [[(1, BOX)]])
    assert set(report.as_dict()) == {
        "mota", "idf1", "idp", "idr", "idsw", "frag", "gt", "fp", "fn"
    }
    assert isinstance(report, MetricsReport)
    assert report.as_dict()["gt"] == 1
