"""Detector-noise simulation over ground-truth boxes.

Three independent corruptions, applied in a fixed order so that a seeded run
is reproducible draw-for-draw: localization noise (center jitter scaled by
box size plus log-normal width/height factors), false negatives (Bernoulli
removal), and false positives (per ground-truth box Bernoulli, placed
uniformly in the frame with log-normal size around the frame's median
ground-truth box).  Levels A-D follow a fixed severity table, D being clean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .geometry import Box
from .rerank import normalize
from .tracker import Detection

# level -> (ln_probability, fn_rate, fp_rate)
LEVELS: dict[str, tuple[float, float, float]] = {
    "A": (0.4, 0.2, 0.2),
    "B": (0.4, 0.0, 0.0),
    "C": (0.2, 0.0, 0.0),
    "D": (0.0, 0.0, 0.0),
}


@dataclass(frozen=True)
class NoiseParams:
    ln_probability: float
    fn_rate: float
    fp_rate: float
    ln_center_sigma: float = 0.1
    ln_scale_sigma: float = 0.1
    ln_score: float = 1.0  # score assigned to jitter-hit boxes
    fp_score_min: float = 0.6
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("ln_probability", "fn_rate", "fp_rate"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {value}")
        if self.ln_center_sigma < 0.0 or self.ln_scale_sigma < 0.0:
            raise ValueError("noise sigmas must be non-negative")
        if not 0.0 <= self.ln_score <= 1.0:
            raise ValueError(f"ln_score must be in [0, 1], got {self.ln_score}")
        if not 0.0 <= self.fp_score_min < 1.0:
            raise ValueError(f"fp_score_min must be in [0, 1), got {self.fp_score_min}")


def preset(level: str, seed: int = 0, **overrides) -> NoiseParams:
    """NoiseParams for severity level A, B, C, or D."""
    try:
        ln, fn, fp = LEVELS[level]
    except KeyError:
        raise ValueError(f"unknown noise level {level!r}; choose from {sorted(LEVELS)}")
    return replace(
        NoiseParams(ln_probability=ln, fn_rate=fn, fp_rate=fp, seed=seed), **overrides
    )


def frame_rng(params: NoiseParams, frame_index: int) -> np.random.Generator:
    """Per-frame generator derived from (seed, frame), safe to use in parallel."""
    return np.random.default_rng([params.seed, frame_index])


def perturb_frame(
    ground_truth: Sequence[tuple[int, Box]],
    params: NoiseParams,
    rng: np.random.Generator,
    frame_size: tuple[float, float],
) -> list[tuple[int | None, Box, float]]:
    """Corrupt one frame of (id, box) ground truth.

    Returns (origin_id, box, score) triples; origin_id None marks a false
    positive.  Draw order per ground-truth box: jitter coin (4 noise draws if
    hit), drop coin; then one false-positive coin per ground-truth box (5
    draws per hit).
    """
    width, height = frame_size
    if width <= 0 or height <= 0:
        raise ValueError(f"frame size must be positive, got {frame_size}")

    out: list[tuple[int | None, Box, float]] = []
    for gid, box in ground_truth:
        produced = box
        score = 1.0
        if rng.random() < params.ln_probability:
            cx, cy = box.center()
            cx += rng.normal(0.0, params.ln_center_sigma * box.w)
            cy += rng.normal(0.0, params.ln_center_sigma * box.h)
            w = box.w * math.exp(rng.normal(0.0, params.ln_scale_sigma))
            h = box.h * math.exp(rng.normal(0.0, params.ln_scale_sigma))
            produced = Box(cx - w / 2.0, cy - h / 2.0, w, h)
            score = params.ln_score
        if rng.random() < params.fn_rate:
            continue
        out.append((gid, produced, score))

    if ground_truth:
        median_w = float(np.median([b.w for _, b in ground_truth]))
        median_h = float(np.median([b.h for _, b in ground_truth]))
        for _ in ground_truth:
            if rng.random() < params.fp_rate:
                w = median_w * math.exp(rng.normal(0.0, params.ln_scale_sigma))
                h = median_h * math.exp(rng.normal(0.0, params.ln_scale_sigma))
                cx = rng.uniform(0.0, width)
                cy = rng.uniform(0.0, height)
                score = rng.uniform(params.fp_score_min, 1.0)
                out.append((None, Box(cx - w / 2.0, cy - h / 2.0, w, h), score))
    return out


def perturb_sequence(
    ground_truth: Sequence[Sequence[tuple[int, Box]]],
    params: NoiseParams,
    frame_size: tuple[float, float],
    identity_embeddings: dict[int, np.ndarray] | None = None,
    embed_jitter: float = 0.02,
) -> list[list[Detection]]:
    """Corrupt a whole sequence into per-frame Detection lists.

    When identity embeddings are supplied, boxes originating from a
    ground-truth id carry that identity's embedding plus Gaussian jitter;
    false positives get a fresh random embedding.  Draw order per frame:
    boxes first, then one embedding per emitted box.
    """
    frames: list[list[Detection]] = []
    dim = None
    if identity_embeddings:
        dims = {v.shape[0] for v in identity_embeddings.values()}
        if len(dims) != 1:
            raise ValueError("identity embeddings must share one dimension")
        dim = dims.pop()

    for frame_index, gt in enumerate(ground_truth, start=1):
        rng = frame_rng(params, frame_index)
        triples = perturb_frame(gt, params, rng, frame_size)
        detections = []
        for origin, box, score in triples:
            embedding = None
            if identity_embeddings is not None:
                if origin is not None:
                    base = identity_embeddings[origin]
                    embedding = normalize(
                        base + embed_jitter * rng.standard_normal(dim)
                    )
                else:
                    embedding = normalize(rng.standard_normal(dim))
            detections.append(Detection(box=box, score=score, embedding=embedding))
        frames.append(detections)
    return frames
