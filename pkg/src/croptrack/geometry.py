"""Axis-aligned box primitives shared by every stage of the tracker."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class Box:
    """A box in pixel coordinates, stored as (left, top, width, height)."""

    x: float
    y: float
    w: float
    h: float

    def center(self) -> tuple[float, float]:
        return (self.x + self.w / 2.0, self.y + self.h / 2.0)

    def area(self) -> float:
        return self.w * self.h

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x, self.y, self.w, self.h)


def iou(a: Box, b: Box) -> float:
    """Intersection over union; 0.0 for disjoint or merely edge-touching boxes."""
    iw = min(a.x + a.w, b.x + b.w) - max(a.x, b.x)
    if iw <= 0.0:
        return 0.0
    ih = min(a.y + a.h, b.y + b.h) - max(a.y, b.y)
    if ih <= 0.0:
        return 0.0
    inter = iw * ih
    union = a.area() + b.area() - inter
    # (x + w) - x can exceed w in floating point; keep the ratio in [0, 1].
    return min(inter / union, 1.0)


def center_distance(a: Box, b: Box) -> float:
    """Euclidean distance between box centers in pixels."""
    ax, ay = a.center()
    bx, by = b.center()
    return math.hypot(ax - bx, ay - by)


def _stack_boxes(boxes: Sequence[Box]) -> np.ndarray:
    if not boxes:
        return np.zeros((0, 4), dtype=np.float64)
    return np.asarray([b.as_tuple() for b in boxes], dtype=np.float64)


def iou_distance_matrix(rows: Sequence[Box], cols: Sequence[Box]) -> np.ndarray:
    """Dense matrix of 1 - IoU costs with shape (len(rows), len(cols))."""
    ra = _stack_boxes(rows)
    ca = _stack_boxes(cols)
    if ra.shape[0] == 0 or ca.shape[0] == 0:
        return np.zeros((ra.shape[0], ca.shape[0]), dtype=np.float64)

    rx1, ry1 = ra[:, 0:1], ra[:, 1:2]
    rx2, ry2 = rx1 + ra[:, 2:3], ry1 + ra[:, 3:4]
    cx1, cy1 = ca[:, 0], ca[:, 1]
    cx2, cy2 = cx1 + ca[:, 2], cy1 + ca[:, 3]

    iw = np.minimum(rx2, cx2[None, :]) - np.maximum(rx1, cx1[None, :])
    ih = np.minimum(ry2, cy2[None, :]) - np.maximum(ry1, cy1[None, :])
    inter = np.clip(iw, 0.0, None) * np.clip(ih, 0.0, None)

    area_r = (ra[:, 2] * ra[:, 3])[:, None]
    area_c = (ca[:, 2] * ca[:, 3])[None, :]
    union = area_r + area_c - inter
    return 1.0 - np.minimum(inter / union, 1.0)


def center_distance_matrix(rows: Sequence[Box], cols: Sequence[Box]) -> np.ndarray:
    """Pairwise center distances with shape (len(rows), len(cols))."""
    ra = _stack_boxes(rows)
    ca = _stack_boxes(cols)
    if ra.shape[0] == 0 or ca.shape[0] == 0:
        return np.zeros((ra.shape[0], ca.shape[0]), dtype=np.float64)
    rc = ra[:, :2] + ra[:, 2:] / 2.0
    cc = ca[:, :2] + ca[:, 2:] / 2.0
    diff = rc[:, None, :] - cc[None, :, :]
    return np.hypot(diff[:, :, 0], diff[:, :, 1])
