"""Gated assignment: Hungarian solving, an exhaustive oracle, and the
one-to-many candidate pool with greedy conflict resolution."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

# 2-D float array of pairwise costs; np.inf marks forbidden pairs.
CostMatrix = np.ndarray


@dataclass(frozen=True)
class Candidate:
    """One admissible (track, detection) pairing with its association cost."""

    track_index: int
    detection_index: int
    cost: float


@dataclass
class AssignmentResult:
    matches: list[tuple[int, int]] = field(default_factory=list)
    unmatched_rows: list[int] = field(default_factory=list)
    unmatched_cols: list[int] = field(default_factory=list)


def hungarian(costs: CostMatrix, gate: float) -> AssignmentResult:
    """Minimum-cost one-to-one assignment over pairs with cost <= gate.

    Pairs above the gate (or infinite) are never matched; among all maximum-
    cardinality gated assignments the returned one has minimal total cost.
    """
    if not math.isfinite(gate):
        raise ValueError(f"gate must be finite, got {gate}")
    costs = np.asarray(costs, dtype=np.float64)
    if costs.ndim != 2:
        raise ValueError(f"cost matrix must be 2-D, got shape {costs.shape}")
    n_rows, n_cols = costs.shape
    all_rows = list(range(n_rows))
    all_cols = list(range(n_cols))
    if n_rows == 0 or n_cols == 0:
        return AssignmentResult([], all_rows, all_cols)

    feasible = np.isfinite(costs) & (costs <= gate)
    if not feasible.any():
        return AssignmentResult([], all_rows, all_cols)

    # A single sentinel edge outruns any total of real costs, so the solver
    # first maximizes the number of gated matches, then minimizes their cost.
    big = (min(n_rows, n_cols) + 1) * (float(costs[feasible].max()) + 1.0)
    padded = np.where(feasible, costs, big)
    rows, cols = linear_sum_assignment(padded)

    matches = [(int(r), int(c)) for r, c in zip(rows, cols) if feasible[r, c]]
    matched_rows = {r for r, _ in matches}
    matched_cols = {c for _, c in matches}
    return AssignmentResult(
        matches=matches,
        unmatched_rows=[r for r in all_rows if r not in matched_rows],
        unmatched_cols=[c for c in all_cols if c not in matched_cols],
    )


def brute_force_assignment(costs: CostMatrix, gate: float) -> AssignmentResult:
    """Exhaustive gated assignment, usable as an oracle for `hungarian`.

    Enumerates every partial assignment over pairs with cost <= gate,
    maximizing match count and then minimizing total cost.  Limited to
    instances whose smaller side is at most 9.
    """
    if not math.isfinite(gate):
        raise ValueError(f"gate must be finite, got {gate}")
    costs = np.asarray(costs, dtype=np.float64)
    if costs.ndim != 2:
        raise ValueError(f"cost matrix must be 2-D, got shape {costs.shape}")
    n_rows, n_cols = costs.shape
    if min(n_rows, n_cols) > 9:
        raise ValueError("brute-force search is limited to 9x9 effective size")

    allowed: list[list[int]] = [
        [c for c in range(n_cols) if math.isfinite(costs[r, c]) and costs[r, c] <= gate]
        for r in range(n_rows)
    ]

    best_count = 0
    best_cost = 0.0
    best_matches: list[tuple[int, int]] = []
    used = [False] * n_cols
    current: list[tuple[int, int]] = []

    def search(row: int, count: int, cost: float) -> None:
        nonlocal best_count, best_cost, best_matches
        remaining = n_rows - row
        if count + remaining < best_count:
            return
        if count + remaining == best_count and cost >= best_cost:
            return
        if row == n_rows:
            if count > best_count or (count == best_count and cost < best_cost):
                best_count = count
                best_cost = cost
                best_matches = list(current)
            return
        for col in allowed[row]:
            if not used[col]:
                used[col] = True
                current.append((row, col))
                search(row + 1, count + 1, cost + costs[row, col])
                current.pop()
                used[col] = False
        search(row + 1, count, cost)

    search(0, 0, 0.0)

    matched_rows = {r for r, _ in best_matches}
    matched_cols = {c for _, c in best_matches}
    return AssignmentResult(
        matches=best_matches,
        unmatched_rows=[r for r in range(n_rows) if r not in matched_rows],
        unmatched_cols=[c for c in range(n_cols) if c not in matched_cols],
    )


def generate_candidates(iou_costs: CostMatrix, iou_gate: float) -> list[tuple[int, int]]:
    """All (row, col) pairs with IoU distance strictly below the gate, row-major."""
    iou_costs = np.asarray(iou_costs, dtype=np.float64)
    rows, cols = np.nonzero(iou_costs < iou_gate)
    return [(int(r), int(c)) for r, c in zip(rows, cols)]


def greedy_resolve(candidates: Sequence[Candidate]) -> AssignmentResult:
    """Accept candidates in ascending cost order, skipping used endpoints.

    Ties break on (track_index, detection_index), so the result does not
    depend on the input ordering.  Rows/cols mentioned in the candidate list
    but never matched are reported unmatched.
    """
    for cand in candidates:
        if not math.isfinite(cand.cost):
            raise ValueError(f"candidate costs must be finite, got {cand.cost}")
    ordered = sorted(
        candidates, key=lambda c: (c.cost, c.track_index, c.detection_index)
    )
    matches: list[tuple[int, int]] = []
    used_rows: set[int] = set()
    used_cols: set[int] = set()
    for cand in ordered:
        if cand.track_index in used_rows or cand.detection_index in used_cols:
            continue
        used_rows.add(cand.track_index)
        used_cols.add(cand.detection_index)
        matches.append((cand.track_index, cand.detection_index))

    seen_rows = {c.track_index for c in candidates}
    seen_cols = {c.detection_index for c in candidates}
    return AssignmentResult(
        matches=matches,
        unmatched_rows=sorted(seen_rows - used_rows),
        unmatched_cols=sorted(seen_cols - used_cols),
    )


def fuse_costs(appearance: CostMatrix, motion: CostMatrix, weight: float) -> CostMatrix:
    """Blend C = weight * C_a + (1 - weight) * C_m.

    The endpoints are exact: weight 0 returns the motion matrix and weight 1
    the appearance matrix (so infinite appearance entries cannot leak into a
    motion-only blend as NaN).
    """
    if not 0.0 <= weight <= 1.0:
        raise ValueError(f"fusion weight must be in [0, 1], got {weight}")
    appearance = np.asarray(appearance, dtype=np.float64)
    motion = np.asarray(motion, dtype=np.float64)
    if appearance.shape != motion.shape:
        raise ValueError(
            f"shape mismatch: appearance {appearance.shape} vs motion {motion.shape}"
        )
    if weight == 0.0:
        return motion.copy()
    if weight == 1.0:
        return appearance.copy()
    return weight * appearance + (1.0 - weight) * motion
