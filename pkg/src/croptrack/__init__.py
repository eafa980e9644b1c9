"""Multi-object tracking with confidence-weighted Kalman filtering and
k-reciprocal appearance reranking.

The top level re-exports the pieces most callers need; generically named
helpers (``feature_bank.update``, ``perturb.preset``) stay module-qualified.
"""

from . import feature_bank, mot_io, perturb
from .assignment import (
    AssignmentResult,
    Candidate,
    brute_force_assignment,
    fuse_costs,
    generate_candidates,
    greedy_resolve,
    hungarian,
)
from .feature_bank import DEFAULT_ALPHAS, PrototypeBank, appearance_distance, init_bank
from .geometry import (
    Box,
    center_distance,
    center_distance_matrix,
    iou,
    iou_distance_matrix,
)
from .kalman import KalmanState, init_state, predict, project_box, update_nsa
from .metrics import MetricsReport, evaluate, match_frame
from .perturb import LEVELS, NoiseParams, perturb_frame, perturb_sequence
from .rerank import (
    RerankParams,
    apply_spatial_gate,
    cosine_distance_matrix,
    k_reciprocal_neighbors,
    normalize,
    rerank_distance_matrix,
)
from .synth import SequenceBundle, SynthScenario, identity_embeddings, synth_sequence
from .tracker import (
    PRESETS,
    CropTracker,
    Detection,
    FrameResult,
    Track,
    TrackerConfig,
    TrackStatus,
    make_config,
    run,
    split_detections,
    stage_two_cost_matrix,
)

__version__ = "0.1.0"

__all__ = [
    "AssignmentResult",
    "Box",
    "Candidate",
    "CropTracker",
    "DEFAULT_ALPHAS",
    "Detection",
    "FrameResult",
    "KalmanState",
    "LEVELS",
    "MetricsReport",
    "NoiseParams",
    "PRESETS",
    "PrototypeBank",
    "RerankParams",
    "SequenceBundle",
    "SynthScenario",
    "Track",
    "TrackStatus",
    "TrackerConfig",
    "appearance_distance",
    "apply_spatial_gate",
    "brute_force_assignment",
    "center_distance",
    "center_distance_matrix",
    "cosine_distance_matrix",
    "evaluate",
    "feature_bank",
    "fuse_costs",
    "generate_candidates",
    "greedy_resolve",
    "hungarian",
    "identity_embeddings",
    "init_bank",
    "init_state",
    "iou",
    "iou_distance_matrix",
    "k_reciprocal_neighbors",
    "make_config",
    "match_frame",
    "mot_io",
    "normalize",
    "perturb",
    "perturb_frame",
    "perturb_sequence",
    "predict",
    "project_box",
    "rerank_distance_matrix",
    "run",
    "split_detections",
    "stage_two_cost_matrix",
    "synth_sequence",
    "update_nsa",
]
