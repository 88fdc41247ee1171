"""Cluster objects into single/multi/any color groups.

Clustering runs on sorted probability profiles, so it is invariant to
which colors carry the mass. Assignment uses the Jensen-Shannon distance;
centroid updates use the arithmetic mean (the mean of non-increasing
distributions is again a non-increasing distribution). The two extreme
clusters by peak mass become "single" and "any"; the remaining one is
"multi".
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import colors
from .errors import ValidationError

MAX_ITERATIONS = 100


@dataclass
class ClusterModel:
    k: int
    centroids: np.ndarray  # (k, 11) sorted profiles
    assignments: dict[str, int]
    labels: dict[int, str] | None = None
    n_iterations: int = 0
    inertia_history: list[float] = field(default_factory=list)

    def group_of(self, object_id: str) -> str:
        if self.labels is None:
            raise ValidationError("cluster model has no labels yet")
        return self.labels[self.assignments[object_id]]


def _seed_centroids(profiles: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding under the JS metric (divergence = squared distance)."""
    n = profiles.shape[0]
    chosen = [int(rng.integers(n))]
    while len(chosen) < k:
        d2 = colors.js_divergence_matrix(profiles, profiles[chosen]).min(axis=1)
        total = d2.sum()
        if total <= 0:
            # all remaining points coincide with a chosen centroid
            remaining = [i for i in range(n) if i not in set(chosen)]
            chosen.append(remaining[0])
            continue
        chosen.append(int(rng.choice(n, p=d2 / total)))
    return profiles[chosen].copy()


def cluster_objects(
    profiles: dict[str, np.ndarray],
    k: int,
    seed: int,
    max_iterations: int = MAX_ITERATIONS,
) -> ClusterModel:
    """Lloyd iteration over sorted profiles with JS-distance assignment.

    Ties on the nearest centroid break toward the lowest cluster index. An
    empty cluster is re-seeded to the profile farthest from its assigned
    centroid. Deterministic for a fixed seed.
    """
    ids = sorted(profiles)
    if len(ids) < k:
        raise ValidationError(f"need at least k={k} profiles, got {len(ids)}")
    P = np.stack([colors.as_distribution(profiles[i]) for i in ids])
    if np.unique(P.round(decimals=12), axis=0).shape[0] < k:
        raise ValidationError(f"fewer than k={k} distinct profiles")

    rng = np.random.default_rng(seed)
    centroids = _seed_centroids(P, k, rng)
    assign = np.full(len(ids), -1, dtype=np.int64)
    history: list[float] = []
    iterations = 0
    for _ in range(max_iterations):
        iterations += 1
        d2 = colors.js_divergence_matrix(P, centroids)
        new_assign = d2.argmin(axis=1)

        for cluster in range(k):
            if np.any(new_assign == cluster):
                continue
            # farthest profile from its currently assigned centroid
            far = int(d2[np.arange(len(ids)), new_assign].argmax())
            centroids[cluster] = P[far]
            d2 = colors.js_divergence_matrix(P, centroids)
            new_assign = d2.argmin(axis=1)

        history.append(float(d2[np.arange(len(ids)), new_assign].sum()))
        if np.array_equal(new_assign, assign):
            break
        assign = new_assign
        for cluster in range(k):
            members = P[assign == cluster]
            if members.shape[0]:
                centroids[cluster] = members.mean(axis=0)

    return ClusterModel(
        k=k,
        centroids=centroids,
        assignments={oid: int(c) for oid, c in zip(ids, assign)},
        n_iterations=iterations,
        inertia_history=history,
    )


def label_clusters(model: ClusterModel) -> ClusterModel:
    """Name the extreme clusters by peak mass: largest first component is
    "single", smallest is "any", the leftover is "multi". Requires k = 3."""
    if model.k != 3:
        raise ValidationError(f"labeling requires k=3, got k={model.k}")
    firsts = model.centroids[:, 0]
    hi = int(firsts.argmax())
    lo = int(firsts.argmin())
    if hi == lo or np.sum(firsts == firsts[hi]) > 1 or np.sum(firsts == firsts[lo]) > 1:
        raise ValidationError("ambiguous extremes: tied centroid peaks")
    mid = ({0, 1, 2} - {hi, lo}).pop()
    model.labels = {hi: "single", lo: "any", mid: "multi"}
    return model


def adjusted_rand_index(a: list[int], b: list[int]) -> float:
    """ARI between two partitions given as parallel label lists."""
    if len(a) != len(b):
        raise ValidationError("partitions must label the same objects")
    n = len(a)
    labels_a = {v: i for i, v in enumerate(sorted(set(a)))}
    labels_b = {v: i for i, v in enumerate(sorted(set(b)))}
    table = np.zeros((len(labels_a), len(labels_b)), dtype=np.int64)
    for x, y in zip(a, b):
        table[labels_a[x], labels_b[y]] += 1

    def comb2(v):
        return v * (v - 1) / 2.0

    sum_ij = comb2(table).sum()
    sum_a = comb2(table.sum(axis=1)).sum()
    sum_b = comb2(table.sum(axis=0)).sum()
    total = comb2(n)
    expected = sum_a * sum_b / total if total else 0.0
    max_index = 0.5 * (sum_a + sum_b)
    if max_index == expected:
        return 1.0  # both partitions trivial and identical in structure
    return float((sum_ij - expected) / (max_index - expected))


@dataclass
class StabilityReport:
    seeds: list[int]
    pairwise_ari: list[dict]
    min_ari: float | None
    non_separable: bool = False

    def to_dict(self) -> dict:
        return {
            "seeds": self.seeds,
            "pairwise_ari": self.pairwise_ari,
            "min_ari": self.min_ari,
            "non_separable": self.non_separable,
        }


def stability_check(
    profiles: dict[str, np.ndarray], k: int, seeds: list[int]
) -> StabilityReport:
    """Cluster once per seed and report pairwise assignment agreement (ARI)."""
    if len(seeds) < 2:
        raise ValidationError("stability check needs at least 2 seeds")
    ids = sorted(profiles)
    P = np.stack([colors.as_distribution(profiles[i]) for i in ids])
    if np.unique(P.round(decimals=12), axis=0).shape[0] < k:
        return StabilityReport(seeds=list(seeds), pairwise_ari=[], min_ari=None, non_separable=True)

    runs = {s: cluster_objects(profiles, k, s) for s in seeds}
    pairs = []
    minimum = 1.0
    for i, s1 in enumerate(seeds):
        for s2 in seeds[i + 1 :]:
            a = [runs[s1].assignments[oid] for oid in ids]
            b = [runs[s2].assignments[oid] for oid in ids]
            ari = adjusted_rand_index(a, b)
            minimum = min(minimum, ari)
            pairs.append({"seed_a": s1, "seed_b": s2, "ari": ari})
    return StabilityReport(seeds=list(seeds), pairwise_ari=pairs, min_ari=minimum)
