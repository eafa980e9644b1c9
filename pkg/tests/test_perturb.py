"""Detector-noise harness: severity presets, per-frame reproducibility,
statistical rates, and the clean level-D identity."""

import numpy as np
import pytest

from croptrack import Box, LEVELS, NoiseParams, perturb
from croptrack.perturb import frame_rng, perturb_frame, perturb_sequence

FRAME = (1920.0, 1080.0)


def grid_ground_truth(n_boxes=64, size=50.0):
    """One frame of well-separated boxes."""
    entries = []
    for i in range(n_boxes):
        row, col = divmod(i, 8)
        entries.append((i + 1, Box(40.0 + 200.0 * col, 40.0 + 120.0 * row, size, size)))
    return entries


def test_levels_table():
    assert LEVELS["A"] == (0.4, 0.2, 0.2)
    assert LEVELS["B"] == (0.4, 0.0, 0.0)
    assert LEVELS["C"] == (0.2, 0.0, 0.0)
    assert LEVELS["D"] == (0.0, 0.0, 0.0)


def test_preset_builds_params_with_overrides():
    params = perturb.preset("B", seed=3, ln_score=0.8)
    assert params.ln_probability == 0.4
    assert params.fn_rate == 0.0
    assert params.seed == 3
    assert params.ln_score == 0.8
    with pytest.raises(ValueError):
        perturb.preset("Z")


def test_noise_params_validation():
    with pytest.raises(ValueError):
        NoiseParams(ln_probability=1.2, fn_rate=0, fp_rate=0)
    with pytest.raises(ValueError):
        NoiseParams(ln_probability=0, fn_rate=0, fp_rate=0, ln_center_sigma=-1)
    with pytest.raises(ValueError):
        NoiseParams(ln_probability=0, fn_rate=0, fp_rate=0, fp_score_min=1.0)


def test_level_d_is_identity():
    gt = grid_ground_truth()
    params = perturb.preset("D", seed=9)
    out = perturb_frame(gt, params, frame_rng(params, 1), FRAME)
    assert len(out) == len(gt)
    for (gid, box), (origin, produced, score) in zip(gt, out):
        assert origin == gid
        assert produced == box
        assert score == 1.0


def test_same_seed_reproduces_same_output():
    gt = [grid_ground_truth() for _ in range(5)]
    params = perturb.preset("A", seed=11)
    first = [
        perturb_frame(f, params, frame_rng(params, i), FRAME)
        for i, f in enumerate(gt, start=1)
    ]
    second = [
        perturb_frame(f, params, frame_rng(params, i), FRAME)
        for i, f in enumerate(gt, start=1)
    ]
    assert first == second
    other = perturb.preset("A", seed=12)
    third = [
        perturb_frame(f, other, frame_rng(other, i), FRAME)
        for i, f in enumerate(gt, start=1)
    ]
    assert first != third


def test_frames_are_independently_seeded():
    """Frame k alone reproduces frame k of a full-sequence run."""
    gt = [grid_ground_truth() for _ in range(6)]
    params = perturb.preset("A", seed=4)
    full = [
        perturb_frame(f, params, frame_rng(params, i), FRAME)
        for i, f in enumerate(gt, start=1)
    ]
    alone = perturb_frame(gt[3], params, frame_rng(params, 4), FRAME)
    assert alone == full[3]


def test_false_negative_rate_concentrates():
    params = NoiseParams(ln_probability=0.0, fn_rate=0.3, fp_rate=0.0, seed=5)
    total = kept = 0
    for frame_no in range(1, 40):
        gt = grid_ground_truth()
        out = perturb_frame(gt, params, frame_rng(params, frame_no), FRAME)
        total += len(gt)
        kept += len(out)
    dropped = 1.0 - kept / total
    # 39 * 64 = 2496 coin flips: 5 sigma is about 0.046.
    assert abs(dropped - 0.3) < 0.05


def test_localization_rate_concentrates():
    params = NoiseParams(ln_probability=0.4, fn_rate=0.0, fp_rate=0.0, seed=6)
    moved = total = 0
    for frame_no in range(1, 40):
        gt = grid_ground_truth()
        out = perturb_frame(gt, params, frame_rng(params, frame_no), FRAME)
        for (gid, box), (_, produced, _) in zip(gt, out):
            total += 1
            if produced != box:
                moved += 1
    assert abs(moved / total - 0.4) < 0.05


def test_false_positives_marked_and_scored():
    params = NoiseParams(
        ln_probability=0.0, fn_rate=0.0, fp_rate=0.5, fp_score_min=0.6, seed=7
    )
    gt = grid_ground_truth()
    out = perturb_frame(gt, params, frame_rng(params, 1), FRAME)
    fps = [(origin, box, score) for origin, box, score in out if origin is None]
    assert len(fps) > 10
    for _, box, score in fps:
        assert 0.6 <= score < 1.0
        cx, cy = box.center()
        assert 0.0 <= cx <= FRAME[0]
        assert 0.0 <= cy <= FRAME[1]
    # Originals all survived (fn_rate 0) and precede the false positives.
    assert [o for o, _, _ in out[: len(gt)]] == [gid for gid, _ in gt]


def test_jittered_boxes_take_ln_score():
    params = NoiseParams(ln_probability=1.0, fn_rate=0.0, fp_rate=0.0, ln_score=0.7, seed=8)
    gt = grid_ground_truth()
    out = perturb_frame(gt, params, frame_rng(params, 1), FRAME)
    assert all(score == 0.7 for _, _, score in out)
    assert all(produced != box for (_, box), (_, produced, _) in zip(gt, out))


def test_sequence_attaches_identity_embeddings():
    gt_frames = [grid_ground_truth(n_boxes=4) for _ in range(3)]
    rng = np.random.default_rng(0)
    identities = {}
    for gid in (1, 2, 3, 4):
        v = rng.standard_normal(16)
        identities[gid] = v / np.linalg.norm(v)
    params = perturb.preset("B", seed=2)
    frames = perturb_sequence(
        gt_frames, params, FRAME, identity_embeddings=identities, embed_jitter=0.02
    )
    assert len(frames) == 3
    for frame, gt in zip(frames, gt_frames):
        assert len(frame) == len(gt)
        for (gid, _), detection in zip(gt, frame):
            cosine = float(np.dot(detection.embedding, identities[gid]))
            assert cosine > 0.95  # jitter is tiny relative to the identity


def test_sequence_without_identities_has_no_embeddings():
    gt_frames = [grid_ground_truth(n_boxes=2)]
    params = perturb.preset("D")
    frames = perturb_sequence(gt_frames, params, FRAME)
    assert all(det.embedding is None for det in frames[0])


def test_false_positive_embeddings_are_unrelated():
    gt_frames = [grid_ground_truth(n_boxes=8) for _ in range(10)]
    identities = {gid: np.eye(32)[i] for i, gid in enumerate(range(1, 9))}
    params = NoiseParams(ln_probability=0.0, fn_rate=0.0, fp_rate=0.5, seed=3)
    frames = perturb_sequence(
        gt_frames, params, FRAME, identity_embeddings=identities
    )
    fp_dets = [d for frame, gt in zip(frames, gt_frames) for d in frame[len(gt):]]
    assert fp_dets
    for det in fp_dets:
        best = max(
            abs(float(np.dot(det.embedding, v))) for v in identities.values()
        )
        assert best < 0.9  # a random 32-d unit vector is far from every axis
