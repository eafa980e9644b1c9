"""Identity-aware tracking metrics: CLEAR counts (MOTA, switches,
fragmentations) and the globally matched ID scores (IDF1/IDP/IDR).

Per-frame correspondence is a minimum-cost bipartite matching on 1 - IoU
restricted to pairs with IoU >= threshold; the per-sequence evaluation is
continuity-aware (a pairing from the previous frame is kept whenever it is
still valid).  ID scores use one global bipartite matching between
ground-truth and predicted identities over per-frame co-occurrence counts.
HOTA-style association scores are out of scope; results export cleanly to
MOT-Challenge text files for external evaluators.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .assignment import hungarian
from .geometry import Box, iou_distance_matrix

_INF = 1e18


@dataclass(frozen=True)
class MetricsReport:
    mota: float
    idf1: float
    idp: float
    idr: float
    idsw: int
    frag: int
    gt_count: int
    fp_count: int
    fn_count: int

    def as_dict(self) -> dict[str, float | int]:
        return {
            "mota": self.mota,
            "idf1": self.idf1,
            "idp": self.idp,
            "idr": self.idr,
            "idsw": self.idsw,
            "frag": self.frag,
            "gt": self.gt_count,
            "fp": self.fp_count,
            "fn": self.fn_count,
        }


FrameEntries = Sequence[tuple[int, Box]]


def _check_unique_ids(entries: FrameEntries, kind: str, frame: int) -> None:
    ids = [i for i, _ in entries]
    if len(ids) != len(set(ids)):
        raise ValueError(f"duplicate {kind} id in frame {frame}")


def match_frame(
    gt: FrameEntries, pred: FrameEntries, iou_threshold: float = 0.5
) -> list[tuple[int, int]]:
    """Index pairs (gt_idx, pred_idx) of the optimal single-frame matching.

    Minimum-cost bipartite matching on 1 - IoU, restricted to pairs with
    IoU >= iou_threshold.
    """
    if not 0.0 < iou_threshold <= 1.0:
        raise ValueError(f"iou_threshold must be in (0, 1], got {iou_threshold}")
    if not gt or not pred:
        return []
    costs = iou_distance_matrix([b for _, b in gt], [b for _, b in pred])
    return hungarian(costs, 1.0 - iou_threshold).matches


def evaluate(
    gt_frames: Sequence[FrameEntries],
    pred_frames: Sequence[FrameEntries],
    iou_threshold: float = 0.5,
) -> MetricsReport:
    """Score a prediction against ground truth over an aligned frame range."""
    if len(gt_frames) != len(pred_frames):
        raise ValueError(
            f"frame ranges differ: {len(gt_frames)} ground-truth vs "
            f"{len(pred_frames)} predicted frames"
        )
    if not 0.0 < iou_threshold <= 1.0:
        raise ValueError(f"iou_threshold must be in (0, 1], got {iou_threshold}")

    gt_count = fp_count = fn_count = idsw = frag = 0
    last_pred: dict[int, int] = {}  # gt id -> last matched pred id
    in_gap: set[int] = set()  # gt ids currently interrupted
    prev_pairs: dict[int, int] = {}  # gt id -> pred id matched in previous frame

    total_pred = 0
    gt_lengths: dict[int, int] = {}
    pred_lengths: dict[int, int] = {}
    cooccur: dict[tuple[int, int], int] = {}

    for frame_no, (gt, pred) in enumerate(zip(gt_frames, pred_frames), start=1):
        _check_unique_ids(gt, "ground-truth", frame_no)
        _check_unique_ids(pred, "prediction", frame_no)
        gt_ids = [i for i, _ in gt]
        pred_ids = [i for i, _ in pred]
        gt_count += len(gt)
        total_pred += len(pred)
        for gid in gt_ids:
            gt_lengths[gid] = gt_lengths.get(gid, 0) + 1
        for pid in pred_ids:
            pred_lengths[pid] = pred_lengths.get(pid, 0) + 1

        valid = np.zeros((len(gt), len(pred)), dtype=bool)
        if gt and pred:
            costs = iou_distance_matrix([b for _, b in gt], [b for _, b in pred])
            valid = costs <= 1.0 - iou_threshold
            for gi, pi in np.argwhere(valid):
                key = (gt_ids[gi], pred_ids[pi])
                cooccur[key] = cooccur.get(key, 0) + 1

        # Carry over still-valid pairings from the previous frame, then match
        # the rest optimally.
        pairs: dict[int, int] = {}
        used_gt: set[int] = set()
        used_pred: set[int] = set()
        pred_index = {pid: k for k, pid in enumerate(pred_ids)}
        for gi, gid in enumerate(gt_ids):
            pid = prev_pairs.get(gid)
            if pid is None or pid not in pred_index:
                continue
            pi = pred_index[pid]
            if valid[gi, pi]:
                pairs[gid] = pid
                used_gt.add(gi)
                used_pred.add(pi)
        free_gt = [gi for gi in range(len(gt)) if gi not in used_gt]
        free_pred = [pi for pi in range(len(pred)) if pi not in used_pred]
        if free_gt and free_pred:
            sub = iou_distance_matrix(
                [gt[gi][1] for gi in free_gt], [pred[pi][1] for pi in free_pred]
            )
            sub = np.where(sub <= 1.0 - iou_threshold, sub, np.inf)
            for r, c in hungarian(sub, _INF).matches:
                pairs[gt_ids[free_gt[r]]] = pred_ids[free_pred[c]]

        fn_count += len(gt) - len(pairs)
        fp_count += len(pred) - len(pairs)

        for gid, pid in pairs.items():
            previous = last_pred.get(gid)
            if previous is not None and previous != pid:
                idsw += 1
            if gid in in_gap:
                frag += 1
                in_gap.discard(gid)
            last_pred[gid] = pid
        for gid in gt_ids:
            if gid not in pairs and gid in last_pred:
                in_gap.add(gid)
        prev_pairs = pairs

    idtp = _global_id_matching(gt_lengths, pred_lengths, cooccur)
    idfn = gt_count - idtp
    idfp = total_pred - idtp

    idf1 = _ratio(2 * idtp, gt_count + total_pred)
    idp = _ratio(idtp, idtp + idfp)
    idr = _ratio(idtp, idtp + idfn)
    if gt_count > 0:
        mota = 1.0 - (fn_count + fp_count + idsw) / gt_count
    else:
        mota = 1.0 if (fp_count + idsw) == 0 else float("-inf")

    return MetricsReport(
        mota=mota,
        idf1=idf1,
        idp=idp,
        idr=idr,
        idsw=idsw,
        frag=frag,
        gt_count=gt_count,
        fp_count=fp_count,
        fn_count=fn_count,
    )


def _ratio(numerator: float, denominator: float) -> float:
    if denominator == 0:
        return 1.0
    return numerator / denominator


def _global_id_matching(
    gt_lengths: dict[int, int],
    pred_lengths: dict[int, int],
    cooccur: dict[tuple[int, int], int],
) -> int:
    """IDTP via one bipartite matching of identities over the whole sequence.

    Classic padded-square construction: pairing a truth with a prediction
    costs their combined lifetime minus twice the frames they co-occur;
    leaving either unmatched costs its own lifetime.
    """
    gt_ids = sorted(gt_lengths)
    pred_ids = sorted(pred_lengths)
    n_g, n_p = len(gt_ids), len(pred_ids)
    if n_g == 0 or n_p == 0:
        return 0
    size = n_g + n_p
    costs = np.full((size, size), _INF, dtype=np.float64)
    for gi, gid in enumerate(gt_ids):
        costs[gi, n_p + gi] = gt_lengths[gid]
        for pi, pid in enumerate(pred_ids):
            overlap = cooccur.get((gid, pid), 0)
            costs[gi, pi] = (
                gt_lengths[gid] + pred_lengths[pid] - 2 * overlap
            )
    for pi, pid in enumerate(pred_ids):
        costs[n_g + pi, pi] = pred_lengths[pid]
    costs[n_g:, n_p:] = 0.0

    rows, cols = linear_sum_assignment(costs)
    idtp = 0
    for r, c in zip(rows, cols):
        if r < n_g and c < n_p:
            idtp += cooccur.get((gt_ids[r], pred_ids[c]), 0)
    return idtp
