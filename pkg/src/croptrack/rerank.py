"""Appearance distances: cosine, k-reciprocal re-ranking, and the spatial gate.

The re-ranking follows the k-reciprocal encoding of Zhong et al. (CVPR 2017):
queries and gallery form one set, every element is encoded by a unit-sum
exp(-d) vector over its expanded reciprocal neighborhood, encodings are
locally smoothed over the k2 nearest rows, and the Jaccard distance between
encodings is blended with the original distance.  Unlike the published code,
the original distance here is the raw cosine distance (no squaring or
column-max normalization), so a blend weight of 1.0 returns the cosine matrix
bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry import Box, center_distance_matrix


@dataclass(frozen=True)
class RerankParams:
    k1: int = 20
    k2: int = 6
    lambda_rr: float = 0.3
    delta: float = 600.0

    def __post_init__(self) -> None:
        if self.k1 < 1:
            raise ValueError(f"k1 must be >= 1, got {self.k1}")
        if not 1 <= self.k2 <= self.k1:
            raise ValueError(f"k2 must be in [1, k1={self.k1}], got {self.k2}")
        if not 0.0 <= self.lambda_rr <= 1.0:
            raise ValueError(f"lambda_rr must be in [0, 1], got {self.lambda_rr}")
        if self.delta <= 0.0:
            raise ValueError(f"delta must be positive, got {self.delta}")


def normalize(vector: np.ndarray) -> np.ndarray:
    """Unit-normalize a feature vector; zero vectors are rejected."""
    vector = np.asarray(vector, dtype=np.float64)
    norm = float(np.linalg.norm(vector))
    if norm == 0.0 or not np.isfinite(norm):
        raise ValueError("cannot normalize a zero or non-finite feature vector")
    return vector / norm


def _stack_embeddings(embeddings: Sequence[np.ndarray] | np.ndarray) -> np.ndarray:
    arr = np.asarray(embeddings, dtype=np.float64)
    if arr.size == 0:
        return arr.reshape(0, 0)
    if arr.ndim != 2:
        raise ValueError("embeddings must share a single dimensionality")
    return arr


def cosine_distance_matrix(
    queries: Sequence[np.ndarray] | np.ndarray,
    gallery: Sequence[np.ndarray] | np.ndarray,
) -> np.ndarray:
    """1 - dot product of unit vectors, clipped into [0, 2]."""
    q = _stack_embeddings(queries)
    g = _stack_embeddings(gallery)
    if q.shape[0] == 0 or g.shape[0] == 0:
        return np.zeros((q.shape[0], g.shape[0]), dtype=np.float64)
    if q.shape[1] != g.shape[1]:
        raise ValueError(
            f"embedding dimensions differ: {q.shape[1]} vs {g.shape[1]}"
        )
    return np.clip(1.0 - q @ g.T, 0.0, 2.0)


def _nearest_with_self(distances: np.ndarray, index: int, k: int) -> np.ndarray:
    """Indices of the k+1 nearest elements to ``index`` (itself included)."""
    order = np.argsort(distances[index], kind="stable")
    return order[: k + 1]


def _reciprocal_with_self(distances: np.ndarray, index: int, k: int) -> np.ndarray:
    forward = _nearest_with_self(distances, index, k)
    keep = [
        j for j in forward if index in _nearest_with_self(distances, int(j), k)
    ]
    return np.asarray(keep, dtype=np.intp)


def k_reciprocal_neighbors(index: int, distances: np.ndarray, k: int) -> set[int]:
    """Expanded k-reciprocal neighbor set of ``index`` (the probe excluded).

    An element belongs to the base set when it is among the probe's k nearest
    and the probe is among its k nearest.  Each member then contributes its
    own half-k reciprocal set whenever that set overlaps the base set in more
    than two thirds of its size.
    """
    distances = np.asarray(distances, dtype=np.float64)
    if distances.ndim != 2 or distances.shape[0] != distances.shape[1]:
        raise ValueError(f"distance matrix must be square, got {distances.shape}")
    n = distances.shape[0]
    if not 0 <= index < n:
        raise IndexError(f"index {index} out of range for {n} elements")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if n <= 1:
        return set()
    k = min(k, n - 1)

    base = set(int(j) for j in _reciprocal_with_self(distances, index, k))
    half = int(round(k / 2.0))
    result = set(base)
    for member in sorted(base):
        candidate = set(
            int(j) for j in _reciprocal_with_self(distances, member, half)
        )
        if not candidate:
            continue
        if len(candidate & base) > (2.0 / 3.0) * len(candidate):
            result |= candidate
    result.discard(index)
    return result


def rerank_distance_matrix(
    queries: Sequence[np.ndarray] | np.ndarray,
    gallery: Sequence[np.ndarray] | np.ndarray,
    params: RerankParams,
) -> np.ndarray:
    """Reranked query-to-gallery distances, shape (len(queries), len(gallery)).

    Returns lambda_rr * cosine + (1 - lambda_rr) * jaccard, where the Jaccard
    distance compares Gaussian-weighted reciprocal-neighbor encodings over the
    query+gallery union.  k1 is clamped to the gallery size and k2 to k1; a
    gallery of one element falls back to plain cosine distance.
    """
    q = _stack_embeddings(queries)
    g = _stack_embeddings(gallery)
    n_q, n_g = q.shape[0], g.shape[0]
    if n_g == 0:
        raise ValueError("gallery must be non-empty")
    if n_q == 0:
        return np.zeros((0, n_g), dtype=np.float64)

    original = cosine_distance_matrix(q, g)
    if n_g <= 1 or params.lambda_rr == 1.0:
        return original

    k1 = min(params.k1, n_g)
    k2 = min(params.k2, k1)

    union = np.vstack([q, g])
    n = n_q + n_g
    dist = cosine_distance_matrix(union, union)
    rank = np.argsort(dist, axis=1, kind="stable")

    def reciprocal(i: int, k: int) -> np.ndarray:
        forward = rank[i, : k + 1]
        backward = rank[forward, : k + 1]
        return forward[np.any(backward == i, axis=1)]

    half = int(round(k1 / 2.0))
    encodings = np.zeros((n, n), dtype=np.float64)
    for i in range(n):
        members = reciprocal(i, k1)
        expanded = [members]
        for m in members:
            candidate = reciprocal(int(m), half)
            overlap = np.intersect1d(candidate, members).size
            if overlap > (2.0 / 3.0) * candidate.size:
                expanded.append(candidate)
        support = np.unique(np.concatenate(expanded))
        weights = np.exp(-dist[i, support])
        encodings[i, support] = weights / weights.sum()

    if k2 != 1:
        encodings = encodings[rank[:, :k2]].mean(axis=1)

    gallery_rows = encodings[n_q:]
    jaccard = np.empty((n_q, n_g), dtype=np.float64)
    for i in range(n_q):
        min_sum = np.minimum(encodings[i], gallery_rows).sum(axis=1)
        jaccard[i] = 1.0 - min_sum / (2.0 - min_sum)

    if params.lambda_rr == 0.0:
        return jaccard
    return params.lambda_rr * original + (1.0 - params.lambda_rr) * jaccard


def apply_spatial_gate(
    distances: np.ndarray,
    query_boxes: Sequence[Box],
    gallery_boxes: Sequence[Box],
    delta: float,
) -> np.ndarray:
    """Set entries whose box centers are >= delta pixels apart to infinity.

    The keep condition is strict (distance < delta), so delta = 0 gates
    everything.
    """
    if delta < 0.0:
        raise ValueError(f"delta must be non-negative, got {delta}")
    distances = np.asarray(distances, dtype=np.float64)
    expected = (len(query_boxes), len(gallery_boxes))
    if distances.shape != expected:
        raise ValueError(
            f"distance matrix shape {distances.shape} does not match boxes {expected}"
        )
    centers = center_distance_matrix(query_boxes, gallery_boxes)
    gated = distances.copy()
    gated[centers >= delta] = np.inf
    return gated
