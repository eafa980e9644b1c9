"""Synthetic sequences: constant-velocity actors bouncing inside the frame,
scripted occlusion windows (optionally with a velocity turn at occlusion
start, which makes pure motion extrapolation drift), and identity embeddings
with a controllable mutual cosine similarity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .geometry import Box
from .rerank import normalize
from .tracker import Detection


@dataclass(frozen=True)
class SynthScenario:
    n_objects: int
    n_frames: int
    frame_size: tuple[int, int] = (1920, 1080)
    embed_dim: int = 32
    similarity: float = 0.0
    embed_jitter: float = 0.02
    size_range: tuple[float, float] = (60.0, 140.0)
    speed_range: tuple[float, float] = (3.0, 10.0)
    occlusions: tuple[tuple[int, int, int], ...] = ()  # (object, start, end) frames, end exclusive
    n_random_occlusions: int = 0
    occlusion_length: int = 8
    occlusion_turn_degrees: float = 0.0  # rotate velocity at occlusion start
    det_score: float = 1.0

    def __post_init__(self) -> None:
        if self.n_objects < 1 or self.n_frames < 1:
            raise ValueError("scenario needs at least one object and one frame")
        if not 0.0 <= self.similarity <= 1.0:
            raise ValueError(f"similarity must be in [0, 1], got {self.similarity}")
        if not 0.0 < self.det_score <= 1.0:
            raise ValueError(f"det_score must be in (0, 1], got {self.det_score}")
        for obj, start, end in self.occlusions:
            if not 0 <= obj < self.n_objects:
                raise ValueError(f"occlusion refers to unknown object {obj}")
            if not 1 <= start < end <= self.n_frames + 1:
                raise ValueError(f"occlusion window ({start}, {end}) out of range")


@dataclass(frozen=True)
class SequenceBundle:
    detections: list[list[Detection]]
    ground_truth: list[list[tuple[int, Box]]]
    frame_size: tuple[int, int]
    n_frames: int
    identity_embeddings: dict[int, np.ndarray] = field(default_factory=dict)


def identity_embeddings(
    n: int, dim: int, similarity: float, rng: np.random.Generator | None = None
) -> np.ndarray:
    """n unit vectors whose pairwise cosine similarity is exactly ``similarity``.

    Built as sqrt(s) * u + sqrt(1-s) * e_i with a shared direction u and
    orthonormal residuals e_i, which needs n + 1 <= dim (n <= dim if s == 0).
    The construction is deterministic; rng is accepted for signature parity.
    """
    if not 0.0 <= similarity <= 1.0:
        raise ValueError(f"similarity must be in [0, 1], got {similarity}")
    if similarity == 1.0:
        vectors = np.zeros((n, dim))
        vectors[:, 0] = 1.0
        return vectors
    needed = n if similarity == 0.0 else n + 1
    if needed > dim:
        raise ValueError(
            f"embed_dim {dim} too small for {n} identities at similarity {similarity}"
        )
    shared = math.sqrt(similarity)
    residual = math.sqrt(1.0 - similarity)
    vectors = np.zeros((n, dim))
    offset = 0 if similarity == 0.0 else 1
    if offset:
        vectors[:, 0] = shared
    for i in range(n):
        vectors[i, offset + i] = residual
    return vectors


def synth_sequence(scenario: SynthScenario, seed: int = 0) -> SequenceBundle:
    """Generate ground truth plus clean detections for a scenario.

    Deterministic in (scenario, seed).  Draw order: per-object geometry
    (size, speed, heading, start), then random occlusion windows, then
    per-frame turn angles and embedding jitter.
    """
    rng = np.random.default_rng(seed)
    width, height = scenario.frame_size
    n = scenario.n_objects

    sizes = np.column_stack(
        [
            rng.uniform(*scenario.size_range, size=n),
            rng.uniform(*scenario.size_range, size=n),
        ]
    )
    speeds = rng.uniform(*scenario.speed_range, size=n)
    headings = rng.uniform(0.0, 2.0 * math.pi, size=n)
    velocities = np.column_stack(
        [speeds * np.cos(headings), speeds * np.sin(headings)]
    )
    centers = np.column_stack(
        [
            rng.uniform(sizes[:, 0] / 2.0, width - sizes[:, 0] / 2.0),
            rng.uniform(sizes[:, 1] / 2.0, height - sizes[:, 1] / 2.0),
        ]
    )

    occlusions = list(scenario.occlusions)
    for _ in range(scenario.n_random_occlusions):
        obj = int(rng.integers(0, n))
        latest = max(2, scenario.n_frames - scenario.occlusion_length)
        start = int(rng.integers(2, latest + 1))
        occlusions.append((obj, start, start + scenario.occlusion_length))
    occluded_at = [set() for _ in range(n)]
    for obj, start, end in occlusions:
        occluded_at[obj].update(range(start, min(end, scenario.n_frames + 1)))
    turn_starts = {(obj, start) for obj, start, _ in occlusions}

    bases = identity_embeddings(
        n, scenario.embed_dim, scenario.similarity, rng
    )
    base_by_id = {obj + 1: bases[obj] for obj in range(n)}

    ground_truth: list[list[tuple[int, Box]]] = []
    detections: list[list[Detection]] = []
    for frame in range(1, scenario.n_frames + 1):
        gt_entries: list[tuple[int, Box]] = []
        det_entries: list[Detection] = []
        for obj in range(n):
            if frame > 1:
                if (obj, frame) in turn_starts and scenario.occlusion_turn_degrees:
                    angle = math.radians(
                        scenario.occlusion_turn_degrees
                        * rng.uniform(0.5, 1.0)
                        * rng.choice([-1.0, 1.0])
                    )
                    cos_a, sin_a = math.cos(angle), math.sin(angle)
                    vx, vy = velocities[obj]
                    velocities[obj] = (cos_a * vx - sin_a * vy, sin_a * vx + cos_a * vy)
                centers[obj] += velocities[obj]
                # Reflect at the frame borders.
                for axis, bound in ((0, width), (1, height)):
                    half = sizes[obj, axis] / 2.0
                    if centers[obj, axis] < half:
                        centers[obj, axis] = 2.0 * half - centers[obj, axis]
                        velocities[obj, axis] *= -1.0
                    elif centers[obj, axis] > bound - half:
                        centers[obj, axis] = 2.0 * (bound - half) - centers[obj, axis]
                        velocities[obj, axis] *= -1.0
            if frame in occluded_at[obj]:
                continue
            w, h = sizes[obj]
            box = Box(centers[obj, 0] - w / 2.0, centers[obj, 1] - h / 2.0, w, h)
            gt_entries.append((obj + 1, box))
            feature = normalize(
                bases[obj]
                + scenario.embed_jitter * rng.standard_normal(scenario.embed_dim)
            )
            det_entries.append(
                Detection(box=box, score=scenario.det_score, embedding=feature)
            )
        ground_truth.append(gt_entries)
        detections.append(det_entries)

    return SequenceBundle(
        detections=detections,
        ground_truth=ground_truth,
        frame_size=scenario.frame_size,
        n_frames=scenario.n_frames,
        identity_embeddings=base_by_id,
    )
