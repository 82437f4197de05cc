"""Representative-day selection with PAM-style k-medoids.

Days are clustered on the concatenation of every feature's 24-hour curve,
each feature scaled by its own maximum so demand magnitudes do not drown
out availability shapes. Medoids are actual observed days; cluster sizes
become the day weights, so the weights always sum to the number of input
days.
"""

from __future__ import annotations

from typing import Mapping

import numpy as np

from .model import HOURS, ScenarioError


def day_feature_matrix(features: Mapping[str, np.ndarray]) -> np.ndarray:
    """Stack per-feature (n_days, 24) arrays into max-normalized day vectors."""
    if not features:
        raise ScenarioError("no features to cluster on")
    blocks = []
    n_days = None
    for name in sorted(features):
        arr = np.asarray(features[name], dtype=float)
        if arr.ndim != 2 or arr.shape[1] != HOURS:
            raise ScenarioError(f"feature {name!r} must have shape (days, {HOURS})")
        if n_days is None:
            n_days = arr.shape[0]
        elif arr.shape[0] != n_days:
            raise ScenarioError("features disagree on the number of days")
        if np.isnan(arr).any():
            raise ScenarioError(f"feature {name!r} has missing hours")
        peak = np.abs(arr).max()
        blocks.append(arr / peak if peak > 0 else arr)
    return np.hstack(blocks)


def k_medoids(matrix: np.ndarray, k: int, seed: int = 0,
              max_sweeps: int = 60) -> tuple[list[int], list[int]]:
    """Greedy build plus swap refinement; deterministic for a given seed.

    Returns (medoid day indices, cluster sizes) with sizes summing to the
    number of rows.
    """
    n = matrix.shape[0]
    if not (1 <= k <= n):
        raise ScenarioError(f"cluster count {k} outside [1, {n}]")
    if k == n:
        return list(range(n)), [1] * n
    # build + swap is deterministic; the seed is accepted so callers can
    # treat this like any other stochastic clustering interface
    diff = matrix[:, None, :] - matrix[None, :, :]
    dist = np.sqrt((diff * diff).sum(axis=2))

    medoids: list[int] = []
    best_to_medoid = np.full(n, np.inf)
    for _ in range(k):
        gains = np.minimum(best_to_medoid[None, :], dist).sum(axis=1)
        gains[medoids] = np.inf
        pick = int(np.argmin(gains))
        medoids.append(pick)
        best_to_medoid = np.minimum(best_to_medoid, dist[pick])

    def cost_of(meds):
        return dist[np.asarray(meds)].min(axis=0).sum()

    current = cost_of(medoids)
    for _ in range(max_sweeps):
        best = (0.0, None, None)
        med_set = set(medoids)
        for mi, m in enumerate(medoids):
            others = [x for x in medoids if x != m]
            rest = dist[np.asarray(others)].min(axis=0) if others else \
                np.full(n, np.inf)
            for cand in range(n):
                if cand in med_set:
                    continue
                new_cost = np.minimum(rest, dist[cand]).sum()
                delta = new_cost - current
                if delta < best[0] - 1e-12:
                    best = (delta, mi, cand)
        if best[1] is None:
            break
        medoids[best[1]] = best[2]
        current += best[0]

    medoids = sorted(medoids)
    assign = dist[np.asarray(medoids)].argmin(axis=0)
    sizes = [int((assign == i).sum()) for i in range(k)]
    return medoids, sizes


def cluster_representative_days(features: Mapping[str, np.ndarray], k: int,
                                seed: int = 0) -> tuple[list[int], list[int]]:
    """Pick k medoid days from (days, 24) feature series.

    Input series must cover complete days (no NaNs); the returned weights
    are cluster sizes and sum to the number of days provided.
    """
    matrix = day_feature_matrix(features)
    return k_medoids(matrix, k, seed)
