"""Constant-velocity Kalman filter over (cx, cy, a, h) box measurements.

The state is the 8-vector (cx, cy, a, h, vcx, vcy, va, vh) where ``a`` is the
aspect ratio w/h.  Process and measurement noise scale with the box height
(position std h/20, velocity std h/160).  The measurement update implements
the noise-scale-adaptive (NSA) rule: the measurement covariance is scaled by
``(1 - confidence)``, so a confidence of 1.0 snaps the posterior onto the
measurement and a confidence of 0.0 is the vanilla update.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import Box

_STD_POSITION = 1.0 / 20.0
_STD_VELOCITY = 1.0 / 160.0

# Floors applied during prediction: a track coasting unmatched with a negative
# height or aspect velocity must not extrapolate through zero size.  A box at
# the floor overlaps nothing, so it behaves as unmatchable rather than crashing
# downstream geometry.
_MIN_ASPECT = 1e-3
_MIN_HEIGHT = 1.0

_F = np.eye(8)
_F[:4, 4:] = np.eye(4)
_H = np.eye(4, 8)


@dataclass(frozen=True)
class KalmanState:
    """Gaussian box state: mean (8,) and covariance (8, 8)."""

    mean: np.ndarray
    covariance: np.ndarray


def _measurement_vector(box: Box) -> np.ndarray:
    if box.w <= 0.0 or box.h <= 0.0:
        raise ValueError(f"box extents must be positive, got w={box.w}, h={box.h}")
    cx, cy = box.center()
    return np.array([cx, cy, box.w / box.h, box.h], dtype=np.float64)


def init_state(box: Box) -> KalmanState:
    """State centered on ``box`` with zero velocity and height-scaled spread."""
    z = _measurement_vector(box)
    mean = np.zeros(8, dtype=np.float64)
    mean[:4] = z
    h = box.h
    std = np.array(
        [
            2.0 * _STD_POSITION * h,
            2.0 * _STD_POSITION * h,
            1e-2,
            2.0 * _STD_POSITION * h,
            10.0 * _STD_VELOCITY * h,
            10.0 * _STD_VELOCITY * h,
            1e-5,
            10.0 * _STD_VELOCITY * h,
        ]
    )
    return KalmanState(mean=mean, covariance=np.diag(std * std))


def predict(state: KalmanState) -> KalmanState:
    """One constant-velocity step; covariance grows by height-scaled Q."""
    h = state.mean[3]
    std = np.array(
        [
            _STD_POSITION * h,
            _STD_POSITION * h,
            1e-2,
            _STD_POSITION * h,
            _STD_VELOCITY * h,
            _STD_VELOCITY * h,
            1e-5,
            _STD_VELOCITY * h,
        ]
    )
    mean = _F @ state.mean
    mean[2] = max(mean[2], _MIN_ASPECT)
    mean[3] = max(mean[3], _MIN_HEIGHT)
    covariance = _F @ state.covariance @ _F.T + np.diag(std * std)
    return KalmanState(mean=mean, covariance=covariance)


def _measurement_noise(h: float) -> np.ndarray:
    std = np.array(
        [_STD_POSITION * h, _STD_POSITION * h, 1e-1, _STD_POSITION * h]
    )
    return np.diag(std * std)


def update_nsa(state: KalmanState, box: Box, confidence: float) -> KalmanState:
    """Measurement update with confidence-scaled noise R~ = (1 - confidence) R.

    ``confidence`` must lie in [0, 1]; 0.0 reproduces the vanilla Kalman
    update while 1.0 trusts the measurement exactly.
    """
    if not 0.0 <= confidence <= 1.0:
        raise ValueError(f"confidence must be in [0, 1], got {confidence}")
    z = _measurement_vector(box)
    mean, cov = state.mean, state.covariance

    noise = (1.0 - confidence) * _measurement_noise(mean[3])
    projected = _H @ cov @ _H.T + noise
    gain = np.linalg.solve(projected, _H @ cov).T

    innovation = z - _H @ mean
    new_mean = mean + gain @ innovation

    # Joseph form keeps the covariance symmetric positive semi-definite.
    identity_kh = np.eye(8) - gain @ _H
    new_cov = identity_kh @ cov @ identity_kh.T + gain @ noise @ gain.T
    new_cov = (new_cov + new_cov.T) / 2.0
    return KalmanState(mean=new_mean, covariance=new_cov)


def project_box(state: KalmanState) -> Box:
    """The (left, top, width, height) box implied by the state mean."""
    cx, cy, a, h = state.mean[:4]
    if h <= 0.0 or a <= 0.0:
        raise ValueError(f"degenerate state: aspect={a}, height={h}")
    w = a * h
    return Box(cx - w / 2.0, cy - h / 2.0, w, h)
