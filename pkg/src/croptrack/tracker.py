"""The tracking cascade: score split, Kalman prediction, appearance-reranked
association in up to three stages, and track lifecycle management.

Per frame the tracker predicts every live track (lost ones included), then
associates high-confidence detections in a one-to-many greedy stage driven by
fused appearance+motion costs, rescues leftovers with a one-to-one Hungarian
over the same fused cost, and finally recovers low-confidence detections by
IoU alone.  Unmatched tracked tracks become lost and are retained for a
configurable number of frames; unmatched high-confidence detections spawn new
tracks.  Four flags (use_nsa, use_reid, use_reranking,
use_greedy_one_to_many) switch the components off individually; with all off
the cascade reduces to a plain ByteTrack-style IoU tracker.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from . import feature_bank, kalman
from .assignment import (
    AssignmentResult,
    Candidate,
    fuse_costs,
    generate_candidates,
    greedy_resolve,
    hungarian,
)
from .feature_bank import PrototypeBank
from .geometry import Box, iou_distance_matrix
from .kalman import KalmanState
from .rerank import (
    RerankParams,
    apply_spatial_gate,
    cosine_distance_matrix,
    normalize,
    rerank_distance_matrix,
)

# Finite stand-in for an open gate when admissibility is encoded as np.inf.
_OPEN_GATE = 1e12


class TrackStatus(enum.Enum):
    TENTATIVE = "tentative"  # reserved; new tracks start Tracked
    TRACKED = "tracked"
    LOST = "lost"
    REMOVED = "removed"


@dataclass
class Detection:
    """One detector output: box, confidence score, optional unit embedding."""

    box: Box
    score: float
    embedding: np.ndarray | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"detection score must be in [0, 1], got {self.score}")
        if self.box.w <= 0.0 or self.box.h <= 0.0:
            raise ValueError(
                f"detection box extents must be positive, got w={self.box.w}, h={self.box.h}"
            )
        if self.embedding is not None:
            self.embedding = normalize(self.embedding)


@dataclass
class Track:
    id: int
    state: KalmanState
    bank: PrototypeBank | None
    status: TrackStatus
    last_box: Box
    frames_since_update: int
    score: float


@dataclass(frozen=True)
class FrameResult:
    """Per-frame output: (track id, box, score) for every Tracked track."""

    frame: int
    entries: list[tuple[int, Box, float]]


@dataclass(frozen=True)
class TrackerConfig:
    tau: float = 0.6
    delta: float = 600.0
    iou_candidate_gate: float = 0.98
    iou_match_gate: float = 0.2
    lambda_fusion: float = 0.75
    retention_frames: int = 30
    rerank: RerankParams = field(default_factory=RerankParams)
    bank_alphas: tuple[float, ...] = feature_bank.DEFAULT_ALPHAS
    use_nsa: bool = True
    use_reid: bool = True
    use_reranking: bool = True
    use_greedy_one_to_many: bool = True

    def __post_init__(self) -> None:
        if not 0.0 <= self.tau <= 1.0:
            raise ValueError(f"tau must be in [0, 1], got {self.tau}")
        if self.delta <= 0.0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        if not 0.0 < self.iou_candidate_gate <= 1.0:
            raise ValueError(
                f"iou_candidate_gate must be in (0, 1], got {self.iou_candidate_gate}"
            )
        if not 0.0 <= self.iou_match_gate < 1.0:
            raise ValueError(
                f"iou_match_gate must be in [0, 1), got {self.iou_match_gate}"
            )
        if not 0.0 <= self.lambda_fusion <= 1.0:
            raise ValueError(
                f"lambda_fusion must be in [0, 1], got {self.lambda_fusion}"
            )
        if self.retention_frames < 0:
            raise ValueError(
                f"retention_frames must be >= 0, got {self.retention_frames}"
            )


# Ablation ladder: each preset switches one more component on.
PRESETS: dict[str, dict[str, bool]] = {
    "bytetrack": dict(
        use_nsa=False, use_reid=False, use_reranking=False, use_greedy_one_to_many=False
    ),
    "+nsa": dict(
        use_nsa=True, use_reid=False, use_reranking=False, use_greedy_one_to_many=False
    ),
    "+reid": dict(
        use_nsa=True, use_reid=True, use_reranking=False, use_greedy_one_to_many=False
    ),
    "+rerank": dict(
        use_nsa=True, use_reid=True, use_reranking=True, use_greedy_one_to_many=False
    ),
    "croptrack": dict(
        use_nsa=True, use_reid=True, use_reranking=True, use_greedy_one_to_many=True
    ),
}

# Flat override keys accepted by make_config that live on RerankParams.
_RERANK_KEYS = ("k1", "k2", "lambda_rr")


def make_config(preset: str | None = None, **overrides) -> TrackerConfig:
    """Build a TrackerConfig from an optional preset plus flat overrides.

    Overrides accept every TrackerConfig field plus the flat rerank keys
    k1/k2/lambda_rr.  A delta override applies to both the tracker gate and
    the nested rerank parameters.
    """
    values: dict = {}
    if preset is not None:
        if preset not in PRESETS:
            raise ValueError(
                f"unknown preset {preset!r}; choose from {sorted(PRESETS)}"
            )
        values.update(PRESETS[preset])

    rerank_overrides = {k: overrides.pop(k) for k in _RERANK_KEYS if k in overrides}
    valid = set(TrackerConfig.__dataclass_fields__)
    unknown = set(overrides) - valid
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    values.update(overrides)

    if "delta" in values and "rerank" not in values:
        rerank_overrides.setdefault("delta", values["delta"])
    if rerank_overrides:
        base = values.get("rerank", RerankParams())
        values["rerank"] = replace(base, **rerank_overrides)
    return TrackerConfig(**values)


def split_detections(
    detections: Sequence[Detection], tau: float
) -> tuple[list[Detection], list[Detection]]:
    """Partition detections into (score > tau, score <= tau), order preserved."""
    high = [d for d in detections if d.score > tau]
    low = [d for d in detections if d.score <= tau]
    return high, low


def _appearance_cost_matrix(
    tracks: Sequence[Track],
    predicted_boxes: Sequence[Box],
    detections: Sequence[Detection],
    config: TrackerConfig,
) -> np.ndarray:
    """Gated appearance costs, shape (tracks, detections); np.inf = gated out.

    Queries are the detection embeddings; the gallery stacks every prototype
    of every track.  After (optional) reranking and the center-distance gate,
    each track's prototype columns collapse to their minimum.
    """
    for det in detections:
        if det.embedding is None:
            raise ValueError("appearance association requires detection embeddings")
    for track in tracks:
        if track.bank is None:
            raise ValueError(f"track {track.id} has no appearance prototypes")

    queries = np.asarray([d.embedding for d in detections], dtype=np.float64)
    gallery = np.vstack([t.bank.prototypes for t in tracks])
    counts = [t.bank.prototypes.shape[0] for t in tracks]

    if config.use_reranking:
        raw = rerank_distance_matrix(queries, gallery, config.rerank)
    else:
        raw = cosine_distance_matrix(queries, gallery)

    gallery_boxes: list[Box] = []
    for box, count in zip(predicted_boxes, counts):
        gallery_boxes.extend([box] * count)
    gated = apply_spatial_gate(
        raw, [d.box for d in detections], gallery_boxes, config.delta
    )

    collapsed = np.empty((len(detections), len(tracks)), dtype=np.float64)
    offset = 0
    for ti, count in enumerate(counts):
        collapsed[:, ti] = gated[:, offset : offset + count].min(axis=1)
        offset += count
    return collapsed.T


def stage_two_cost_matrix(
    tracks: Sequence[Track],
    detections: Sequence[Detection],
    config: TrackerConfig,
) -> np.ndarray:
    """The fused stage-2 cost matrix (tracks x detections), unmasked.

    lambda_fusion blends the gated (optionally reranked) appearance matrix
    with the IoU distance of predicted boxes; weights 0 and 1 return the
    respective matrix exactly.  The admissibility mask applied during
    association is not included here.
    """
    predicted = [kalman.project_box(t.state) for t in tracks]
    motion = iou_distance_matrix(predicted, [d.box for d in detections])
    if not config.use_reid:
        return motion.copy()
    appearance = _appearance_cost_matrix(tracks, predicted, detections, config)
    return fuse_costs(appearance, motion, config.lambda_fusion)


class CropTracker:
    """Stateful frame-by-frame tracker; see the module docstring."""

    def __init__(self, config: TrackerConfig | None = None):
        self.config = config if config is not None else TrackerConfig()
        self._tracks: list[Track] = []
        self._next_id = 1
        self._frame_index = 0

    @property
    def tracks(self) -> list[Track]:
        return list(self._tracks)

    def step(
        self, detections: Sequence[Detection], frame_index: int | None = None
    ) -> FrameResult:
        """Advance one frame and return the Tracked entries."""
        if frame_index is None:
            frame_index = self._frame_index + 1
        if frame_index <= self._frame_index:
            raise ValueError(
                f"frame index must increase: got {frame_index} after {self._frame_index}"
            )
        self._frame_index = frame_index

        high, low = split_detections(detections, self.config.tau)

        active = self._tracks
        for track in active:
            track.state = kalman.predict(track.state)
            track.frames_since_update += 1
        predicted = [kalman.project_box(t.state) for t in active]

        # Stage 1: high-confidence detections.
        matches1: list[tuple[int, int]] = []
        if active and high:
            if self.config.use_greedy_one_to_many and self.config.use_reid:
                result = self._stage_one_greedy(active, predicted, high)
            else:
                result = self._motion_assignment(
                    predicted, [d.box for d in high]
                )
            matches1 = result.matches
        for ti, di in matches1:
            self._apply_match(active[ti], high[di])
        rem_tracks = [i for i in range(len(active)) if i not in {t for t, _ in matches1}]
        rem_dets = [j for j in range(len(high)) if j not in {d for _, d in matches1}]

        # Stage 2: appearance rescue of stage-1 leftovers.
        matches2: list[tuple[int, int]] = []
        if self.config.use_reid and rem_tracks and rem_dets:
            result = self._stage_two(
                [active[i] for i in rem_tracks],
                [predicted[i] for i in rem_tracks],
                [high[j] for j in rem_dets],
            )
            matches2 = [(rem_tracks[r], rem_dets[c]) for r, c in result.matches]
            for ti, di in matches2:
                self._apply_match(active[ti], high[di])
        rem_tracks = [i for i in rem_tracks if i not in {t for t, _ in matches2}]
        rem_dets = [j for j in rem_dets if j not in {d for _, d in matches2}]

        # Stage 3: low-confidence recovery by IoU; leftovers are discarded.
        matches3: list[tuple[int, int]] = []
        if rem_tracks and low:
            costs = iou_distance_matrix(
                [predicted[i] for i in rem_tracks], [d.box for d in low]
            )
            result = hungarian(costs, 0.5)
            matches3 = [(rem_tracks[r], c) for r, c in result.matches]
            for ti, di in matches3:
                self._apply_match(active[ti], low[di])
        rem_tracks = [i for i in rem_tracks if i not in {t for t, _ in matches3}]

        # Lifecycle: miss -> Lost, overdue Lost -> Removed.
        for i in rem_tracks:
            track = active[i]
            if track.status is TrackStatus.TRACKED:
                track.status = TrackStatus.LOST
            if track.frames_since_update > self.config.retention_frames:
                track.status = TrackStatus.REMOVED
        self._tracks = [t for t in self._tracks if t.status is not TrackStatus.REMOVED]

        # Births: every leftover high detection starts a fresh track.
        for j in rem_dets:
            self._spawn(high[j])

        entries = [
            (t.id, kalman.project_box(t.state), t.score)
            for t in self._tracks
            if t.status is TrackStatus.TRACKED
        ]
        entries.sort(key=lambda e: e[0])
        return FrameResult(frame=frame_index, entries=entries)

    # ------------------------------------------------------------------
    # association stages

    def _motion_assignment(
        self, predicted: Sequence[Box], det_boxes: Sequence[Box]
    ) -> AssignmentResult:
        """One-to-one Hungarian on IoU distance with the IoU-floor gate."""
        costs = iou_distance_matrix(predicted, det_boxes)
        masked = np.where(
            costs < 1.0 - self.config.iou_match_gate, costs, np.inf
        )
        return hungarian(masked, _OPEN_GATE)

    def _stage_one_greedy(
        self,
        tracks: Sequence[Track],
        predicted: Sequence[Box],
        detections: Sequence[Detection],
    ) -> AssignmentResult:
        """One-to-many candidates over a loose IoU gate, resolved greedily by
        fused appearance+motion cost; spatially gated candidates are dropped."""
        motion = iou_distance_matrix(predicted, [d.box for d in detections])
        pairs = generate_candidates(motion, self.config.iou_candidate_gate)
        if not pairs:
            return AssignmentResult([], list(range(len(tracks))), list(range(len(detections))))
        appearance = _appearance_cost_matrix(tracks, predicted, detections, self.config)
        fused = fuse_costs(appearance, motion, self.config.lambda_fusion)
        candidates = [
            Candidate(t, d, float(fused[t, d]))
            for t, d in pairs
            if np.isfinite(fused[t, d])
        ]
        return greedy_resolve(candidates)

    def _stage_two(
        self,
        tracks: Sequence[Track],
        predicted: Sequence[Box],
        detections: Sequence[Detection],
    ) -> AssignmentResult:
        """Hungarian over fused cost; a pair is admissible when its IoU
        distance is below 1 - iou_match_gate and its appearance is finite."""
        motion = iou_distance_matrix(predicted, [d.box for d in detections])
        appearance = _appearance_cost_matrix(tracks, predicted, detections, self.config)
        fused = fuse_costs(appearance, motion, self.config.lambda_fusion)
        admissible = (motion < 1.0 - self.config.iou_match_gate) & np.isfinite(
            appearance
        )
        fused = np.where(admissible, fused, np.inf)
        return hungarian(fused, _OPEN_GATE)

    # ------------------------------------------------------------------
    # lifecycle

    def _apply_match(self, track: Track, detection: Detection) -> None:
        confidence = detection.score if self.config.use_nsa else 0.0
        track.state = kalman.update_nsa(track.state, detection.box, confidence)
        if detection.embedding is not None:
            if track.bank is None:
                track.bank = feature_bank.init_bank(
                    detection.embedding, self.config.bank_alphas
                )
            else:
                track.bank = feature_bank.update(track.bank, detection.embedding)
        track.status = TrackStatus.TRACKED
        track.frames_since_update = 0
        track.score = detection.score
        track.last_box = detection.box

    def _spawn(self, detection: Detection) -> None:
        bank = None
        if detection.embedding is not None:
            bank = feature_bank.init_bank(detection.embedding, self.config.bank_alphas)
        self._tracks.append(
            Track(
                id=self._next_id,
                state=kalman.init_state(detection.box),
                bank=bank,
                status=TrackStatus.TRACKED,
                last_box=detection.box,
                frames_since_update=0,
                score=detection.score,
            )
        )
        self._next_id += 1


def run(
    frames: Iterable[Sequence[Detection]], config: TrackerConfig | None = None
) -> list[FrameResult]:
    """Track a whole sequence; purely a fold of CropTracker.step."""
    tracker = CropTracker(config)
    return [tracker.step(frame_dets) for frame_dets in frames]
