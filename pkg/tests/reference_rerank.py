"""Plain-Python reference for the k-reciprocal reranking procedure.

Implemented from the published description (Zhong et al., CVPR 2017) with
sets, dicts, and explicit loops — deliberately none of the array tricks the
package uses — so that the two implementations check each other.  Matches
the package contract: the original distance is raw cosine, k1 is clamped to
the gallery size, k2 to k1, and a gallery of at most one element falls back
to plain cosine distance.
"""

from __future__ import annotations

import math
from typing import Sequence


def _cosine(u: Sequence[float], v: Sequence[float]) -> float:
    return 1.0 - math.fsum(a * b for a, b in zip(u, v))


def reference_rerank(
    queries: Sequence[Sequence[float]],
    gallery: Sequence[Sequence[float]],
    k1: int,
    k2: int,
    lambda_rr: float,
) -> list[list[float]]:
    """Reranked query-to-gallery distances as nested lists."""
    queries = [list(map(float, q)) for q in queries]
    gallery = [list(map(float, g)) for g in gallery]
    n_q, n_g = len(queries), len(gallery)
    if n_g == 0:
        raise ValueError("gallery must be non-empty")

    cosine = [[_cosine(q, g) for g in gallery] for q in queries]
    if n_g <= 1 or lambda_rr == 1.0:
        return cosine

    k1 = min(k1, n_g)
    k2 = min(k2, k1)
    points = queries + gallery
    n = len(points)
    dist = [[_cosine(points[i], points[j]) for j in range(n)] for i in range(n)]
    # Stable nearest-first orderings: ties broken by index, as a stable sort
    # of the distance row would.
    orders = [
        sorted(range(n), key=lambda j, i=i: (dist[i][j], j)) for i in range(n)
    ]

    def forward(i: int, k: int) -> list[int]:
        """The k+1 nearest elements to i, i itself included."""
        return orders[i][: k + 1]

    def reciprocal(i: int, k: int) -> list[int]:
        return [j for j in forward(i, k) if i in forward(j, k)]

    half = int(round(k1 / 2.0))
    encodings: list[dict[int, float]] = []
    for i in range(n):
        base = reciprocal(i, k1)
        base_set = set(base)
        support = set(base)
        for member in base:
            candidate = set(reciprocal(member, half))
            if candidate and len(candidate & base_set) > (2.0 / 3.0) * len(candidate):
                support |= candidate
        weights = {j: math.exp(-dist[i][j]) for j in sorted(support)}
        total = math.fsum(weights.values())
        encodings.append({j: w / total for j, w in weights.items()})

    if k2 != 1:
        smoothed: list[dict[int, float]] = []
        for i in range(n):
            rows = orders[i][:k2]
            acc: dict[int, float] = {}
            for row in rows:
                for j, w in encodings[row].items():
                    acc[j] = acc.get(j, 0.0) + w
            smoothed.append({j: w / len(rows) for j, w in acc.items()})
        encodings = smoothed

    out = [[0.0] * n_g for _ in range(n_q)]
    for qi in range(n_q):
        v_q = encodings[qi]
        for gj in range(n_g):
            v_g = encodings[n_q + gj]
            keys = set(v_q) | set(v_g)
            min_sum = math.fsum(min(v_q.get(t, 0.0), v_g.get(t, 0.0)) for t in keys)
            max_sum = math.fsum(max(v_q.get(t, 0.0), v_g.get(t, 0.0)) for t in keys)
            jaccard = 1.0 - min_sum / max_sum
            out[qi][gj] = lambda_rr * cosine[qi][gj] + (1.0 - lambda_rr) * jaccard
    return out
