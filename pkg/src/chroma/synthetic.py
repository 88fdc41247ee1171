"""Synthetic fixtures: a linearly recoverable probing task.

Each object gets a latent vector z; its target color distribution is
softmax(W z) for a fixed random matrix W, and its embeddings are z itself
(one row per template, optionally with small template-specific jitter).
A probe that recovers the linear map solves the task, which makes these
fixtures a calibrated sanity check for the probing stack.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import colors
from .annotations import ObjectRecord
from .probing import EmbeddingSet


@dataclass
class LinearTask:
    records: list[ObjectRecord]
    embeddings: EmbeddingSet
    targets: dict[str, np.ndarray]
    train_objects: list[str]
    eval_objects: list[str]


def linear_probe_task(
    n_train: int = 311,
    n_eval: int = 103,
    n_templates: int = 2,
    dim: int = 16,
    seed: int = 0,
    logit_scale: float = 2.0,
    jitter: float = 0.0,
) -> LinearTask:
    """Build the synthetic task; deterministic per seed.

    ``logit_scale`` sets the peakiness of the targets (std of the logits).
    """
    rng = np.random.default_rng(seed)
    n = n_train + n_eval
    z = rng.standard_normal((n, dim))
    w = rng.standard_normal((colors.N_COLORS, dim)) * (logit_scale / np.sqrt(dim))
    logits = z @ w.T
    logits -= logits.max(axis=1, keepdims=True)
    e = np.exp(logits)
    probs = e / e.sum(axis=1, keepdims=True)

    ids = [f"obj{i:04d}" for i in range(n)]
    records = []
    targets = {}
    embeddings = EmbeddingSet()
    for i, oid in enumerate(ids):
        gt = probs[i]
        targets[oid] = gt
        records.append(
            ObjectRecord(
                object_id=oid,
                singular=oid,
                plural=oid + "s",
                ground_truth=gt,
                n_annotations=0,
                split="train" if i < n_train else "val",
            )
        )
        for t in range(n_templates):
            vec = z[i]
            if jitter > 0:
                vec = vec + jitter * rng.standard_normal(dim)
            embeddings.add(oid, f"tmpl{t}", vec)
    return LinearTask(
        records=records,
        embeddings=embeddings,
        targets=targets,
        train_objects=ids[:n_train],
        eval_objects=ids[n_train:],
    )


def three_family_profiles(
    per_family: int = 20, seed: int = 0, noise: float = 0.01
) -> tuple[dict[str, np.ndarray], dict[str, int]]:
    """Sorted profiles from three well-separated shape families (near-delta,
    three-color, near-uniform) plus the true family of each object."""
    rng = np.random.default_rng(seed)
    bases = [
        np.array([0.86, 0.05, 0.03, 0.02, 0.01, 0.01, 0.01, 0.005, 0.005, 0.0, 0.0]),
        np.array([0.35, 0.30, 0.25, 0.04, 0.02, 0.01, 0.01, 0.01, 0.005, 0.005, 0.0]),
        np.full(11, 1.0 / 11),
    ]
    profiles: dict[str, np.ndarray] = {}
    truth: dict[str, int] = {}
    for fam, base in enumerate(bases):
        for j in range(per_family):
            raw = np.maximum(base + noise * rng.random(11), 1e-9)
            p = raw / raw.sum()
            oid = f"fam{fam}-{j:03d}"
            profiles[oid] = colors.sorted_profile(p)
            truth[oid] = fam
    return profiles, truth
