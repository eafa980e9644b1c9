"""Constant-velocity filter: initialization, prediction, the
confidence-scaled measurement update, and numerical health of the
covariance over long random runs."""

import numpy as np
import pytest

from croptrack.geometry import Box, iou
from croptrack.kalman import (
    KalmanState,
    init_state,
    predict,
    project_box,
    update_nsa,
)


def _measurement(box):
    return np.array([box.x + box.w / 2, box.y + box.h / 2, box.w / box.h, box.h])


def test_init_centers_state_with_zero_velocity():
    box = Box(10.0, 20.0, 30.0, 60.0)
    state = init_state(box)
    np.testing.assert_allclose(state.mean[:4], _measurement(box))
    np.testing.assert_array_equal(state.mean[4:], 0.0)
    assert state.covariance.shape == (8, 8)


def test_init_rejects_degenerate_box():
    with pytest.raises(ValueError):
        init_state(Box(0, 0, 0.0, 10))
    with pytest.raises(ValueError):
        init_state(Box(0, 0, 10, -1.0))


def test_project_box_round_trips_init():
    box = Box(3.25, -7.5, 24.0, 48.0)
    out = project_box(init_state(box))
    # w is reconstructed as (w/h)*h, so exactness is only up to rounding.
    np.testing.assert_allclose(out.as_tuple(), box.as_tuple(), rtol=0, atol=1e-9)


def test_project_box_rejects_degenerate_state():
    state = init_state(Box(0, 0, 10, 10))
    bad = KalmanState(
        mean=np.array([0, 0, 1.0, -5.0, 0, 0, 0, 0], dtype=float),
        covariance=state.covariance,
    )
    with pytest.raises(ValueError):
        project_box(bad)


def test_predict_advances_by_velocity():
    state = init_state(Box(0.0, 0.0, 10.0, 10.0))
    mean = state.mean.copy()
    mean[4:6] = [3.0, -2.0]  # (vcx, vcy)
    state = KalmanState(mean=mean, covariance=state.covariance)
    out = predict(state)
    assert out.mean[0] == pytest.approx(5.0 + 3.0)
    assert out.mean[1] == pytest.approx(5.0 - 2.0)
    assert out.mean[2:4] == pytest.approx([1.0, 10.0])
    # Velocity itself is untouched by prediction.
    np.testing.assert_allclose(out.mean[4:], mean[4:])


def test_predict_inflates_position_uncertainty():
    state = init_state(Box(0, 0, 50, 50))
    out = predict(state)
    assert out.covariance[0, 0] > state.covariance[0, 0]


def test_update_confidence_validation():
    state = init_state(Box(0, 0, 10, 10))
    for bad in (-0.1, 1.5, np.nan):
        with pytest.raises(ValueError):
            update_nsa(state, Box(1, 1, 10, 10), bad)


def test_vanilla_update_moves_mean_toward_measurement():
    state = predict(init_state(Box(0, 0, 10, 10)))
    target = Box(4.0, 4.0, 10.0, 10.0)
    before = np.linalg.norm(state.mean[:2] - _measurement(target)[:2])
    after = update_nsa(state, target, 0.0)
    dist = np.linalg.norm(after.mean[:2] - _measurement(target)[:2])
    assert dist < before


def test_full_confidence_snaps_to_measurement():
    state = predict(init_state(Box(0, 0, 10, 10)))
    target = Box(7.0, -3.0, 12.0, 9.0)
    out = update_nsa(state, target, 1.0)
    np.testing.assert_allclose(out.mean[:4], _measurement(target), atol=1e-9)


def test_higher_confidence_lands_closer_to_measurement():
    target = Box(8.0, 8.0, 10.0, 10.0)
    z = _measurement(target)
    distances = []
    for confidence in (0.0, 0.5, 0.9, 1.0):
        state = predict(init_state(Box(0, 0, 10, 10)))
        out = update_nsa(state, target, confidence)
        distances.append(float(np.linalg.norm(out.mean[:4] - z)))
    assert distances == sorted(distances, reverse=True)
    assert distances[0] > distances[-1]


def test_update_never_inflates_covariance():
    state = predict(init_state(Box(0, 0, 20, 20)))
    out = update_nsa(state, Box(1, 1, 20, 20), 0.3)
    gap = state.covariance - out.covariance
    assert np.min(np.linalg.eigvalsh(gap)) >= -1e-9


def test_covariance_stays_symmetric_psd_over_random_cycles():
    rng = np.random.default_rng(7)
    state = init_state(Box(100, 100, 40, 80))
    for _ in range(1000):
        state = predict(state)
        if rng.random() < 0.7:
            cx, cy = state.mean[:2]
            w = float(np.clip(state.mean[2] * state.mean[3] + rng.normal(0, 2), 5, 200))
            h = float(np.clip(state.mean[3] + rng.normal(0, 2), 5, 200))
            box = Box(cx - w / 2 + rng.normal(0, 3), cy - h / 2 + rng.normal(0, 3), w, h)
            state = update_nsa(state, box, float(rng.uniform(0, 1)))
        cov = state.covariance
        np.testing.assert_allclose(cov, cov.T, atol=1e-9)
        assert np.min(np.linalg.eigvalsh(cov)) >= -1e-9


def test_filter_locks_onto_constant_velocity_motion():
    state = init_state(Box(0.0, 0.0, 20.0, 20.0))
    for k in range(1, 40):
        state = predict(state)
        state = update_nsa(state, Box(5.0 * k, 2.0 * k, 20.0, 20.0), 0.0)
    predicted = project_box(predict(state))
    expected = Box(5.0 * 40, 2.0 * 40, 20.0, 20.0)
    assert iou(predicted, expected) > 0.9
    assert state.mean[4] == pytest.approx(5.0, abs=0.2)
    assert state.mean[5] == pytest.approx(2.0, abs=0.2)


def test_repeated_constant_box_converges():
    box = Box(50.0, 60.0, 30.0, 30.0)
    state = init_state(box)
    for _ in range(30):
        state = predict(state)
        state = update_nsa(state, box, 0.0)
    assert iou(project_box(state), box) > 0.99
