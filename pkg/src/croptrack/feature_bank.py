"""Per-track appearance prototypes smoothed at several EMA momenta.

Each track keeps P unit-norm prototypes of the same feature, one per momentum
alpha.  Low alphas chase the newest feature, high alphas remember the past,
and association takes the minimum distance across prototypes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

DEFAULT_ALPHAS = (0.1, 0.5, 0.9)


@dataclass(frozen=True)
class PrototypeBank:
    prototypes: np.ndarray  # (P, D), unit rows
    alphas: np.ndarray  # (P,), each in [0, 1)


def init_bank(feature: np.ndarray, alphas: Sequence[float] = DEFAULT_ALPHAS) -> PrototypeBank:
    """Bank with every prototype set to the (unit-norm) feature."""
    feature = _as_unit(feature)
    alphas_arr = np.asarray(alphas, dtype=np.float64)
    if alphas_arr.ndim != 1 or alphas_arr.size == 0:
        raise ValueError("alphas must be a non-empty 1-D sequence")
    if np.any(alphas_arr < 0.0) or np.any(alphas_arr >= 1.0):
        raise ValueError(f"alphas must lie in [0, 1), got {alphas_arr}")
    prototypes = np.tile(feature, (alphas_arr.size, 1))
    return PrototypeBank(prototypes=prototypes, alphas=alphas_arr)


def update(bank: PrototypeBank, feature: np.ndarray) -> PrototypeBank:
    """EMA step e_p <- alpha_p * e_p + (1 - alpha_p) * f, renormalized."""
    feature = _as_unit(feature)
    if feature.shape[0] != bank.prototypes.shape[1]:
        raise ValueError(
            f"feature dimension {feature.shape[0]} does not match bank "
            f"dimension {bank.prototypes.shape[1]}"
        )
    alphas = bank.alphas[:, None]
    blended = alphas * bank.prototypes + (1.0 - alphas) * feature[None, :]
    norms = np.linalg.norm(blended, axis=1, keepdims=True)
    if np.any(norms == 0.0):
        raise ValueError("prototype update collapsed to a zero vector")
    return PrototypeBank(prototypes=blended / norms, alphas=bank.alphas)


def appearance_distance(bank: PrototypeBank, distances: np.ndarray) -> float:
    """Collapse a per-prototype distance row to the bank's best (minimum)."""
    distances = np.asarray(distances, dtype=np.float64)
    if distances.shape != (bank.prototypes.shape[0],):
        raise ValueError(
            f"expected {bank.prototypes.shape[0]} prototype distances, "
            f"got shape {distances.shape}"
        )
    return float(np.min(distances))


def _as_unit(feature: np.ndarray) -> np.ndarray:
    feature = np.asarray(feature, dtype=np.float64)
    if feature.ndim != 1:
        raise ValueError(f"feature must be 1-D, got shape {feature.shape}")
    norm = float(np.linalg.norm(feature))
    if norm == 0.0 or not np.isfinite(norm):
        raise ValueError("feature must have a positive finite norm")
    return feature / norm
