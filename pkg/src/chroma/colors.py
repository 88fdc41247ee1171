"""Canonical color vocabulary and probability-distribution primitives.

A color distribution is a plain float64 numpy array of length 11 whose
entries are aligned to :data:`COLORS` and sum to 1. All divergences use
natural logarithms (nats). Every function here is pure, so the module is
safe to use from any number of threads.
"""

from __future__ import annotations

import numpy as np

from .errors import ValidationError

# Fixed canonical order; every 11-vector in the toolkit follows it.
COLORS = (
    "red",
    "orange",
    "yellow",
    "green",
    "blue",
    "purple",
    "pink",
    "black",
    "white",
    "grey",
    "brown",
)
N_COLORS = len(COLORS)

_INDEX = {name: i for i, name in enumerate(COLORS)}

LN2 = float(np.log(2.0))

# Absolute tolerance on the weight sum for a valid distribution, and the
# larger tolerance up to which loaders may silently renormalize.
SUM_TOL = 1e-9
RENORM_TOL = 1e-6


def color_index(name: str) -> int:
    """Position of ``name`` in the canonical order; KeyError for anything else."""
    return _INDEX[name]


def _as_vector(values) -> np.ndarray:
    v = np.asarray(values, dtype=np.float64)
    if v.shape != (N_COLORS,):
        raise ValidationError(f"expected {N_COLORS} color weights, got shape {v.shape}")
    return v


def normalize(raw) -> np.ndarray:
    """Scale a non-negative 11-vector so it sums to 1.

    Raises ValidationError("degenerate rating vector") for all-zero or
    negative input.
    """
    v = _as_vector(raw)
    if np.any(v < 0) or not np.all(np.isfinite(v)):
        raise ValidationError("degenerate rating vector: negative or non-finite entry")
    total = v.sum()
    if total <= 0:
        raise ValidationError("degenerate rating vector: all entries zero")
    return v / total


def as_distribution(weights, renormalize: bool = False) -> np.ndarray:
    """Validate ``weights`` as a color distribution and return it as float64.

    With ``renormalize=True`` (loader behaviour) a sum within RENORM_TOL of 1
    is silently rescaled; anything further off is rejected.
    """
    v = _as_vector(weights)
    if np.any(v < 0) or not np.all(np.isfinite(v)):
        raise ValidationError("invalid distribution: negative or non-finite weight")
    total = v.sum()
    if abs(total - 1.0) <= SUM_TOL:
        return v
    if renormalize and abs(total - 1.0) <= RENORM_TOL and total > 0:
        return v / total
    raise ValidationError(f"invalid distribution: weights sum to {total!r}, not 1")


def uniform() -> np.ndarray:
    """The uniform distribution over the 11 colors."""
    return np.full(N_COLORS, 1.0 / N_COLORS)


def delta(color: str | int) -> np.ndarray:
    """Point mass on a single color (by name or canonical index)."""
    idx = color if isinstance(color, (int, np.integer)) else color_index(color)
    d = np.zeros(N_COLORS)
    d[idx] = 1.0
    return d


def _kl_to_midpoint(p: np.ndarray, m: np.ndarray) -> float:
    # 0*ln(0) := 0; p > 0 implies m > 0 because m is a midpoint.
    mask = p > 0
    return float(np.sum(p[mask] * np.log(p[mask] / m[mask])))


def js_divergence(p, q) -> float:
    """Jensen-Shannon divergence in nats; symmetric and bounded by ln 2."""
    p = as_distribution(p)
    q = as_distribution(q)
    m = 0.5 * (p + q)
    return max(0.0, 0.5 * _kl_to_midpoint(p, m) + 0.5 * _kl_to_midpoint(q, m))


def js_distance(p, q) -> float:
    """sqrt of the JS divergence; a proper metric on distributions."""
    return float(np.sqrt(js_divergence(p, q)))


def js_divergence_rows(p_rows: np.ndarray, q_rows: np.ndarray) -> np.ndarray:
    """Row-wise JS divergence of two (n, 11) arrays of distributions.

    No validation; callers guarantee rows are valid distributions. Used in
    hot loops (probe evaluation, clustering).
    """
    m = 0.5 * (p_rows + q_rows)
    with np.errstate(divide="ignore", invalid="ignore"):
        tp = np.where(p_rows > 0, p_rows * np.log(p_rows / m), 0.0)
        tq = np.where(q_rows > 0, q_rows * np.log(q_rows / m), 0.0)
    return np.maximum(0.0, 0.5 * tp.sum(axis=1) + 0.5 * tq.sum(axis=1))


def js_divergence_matrix(p_rows: np.ndarray, q_rows: np.ndarray) -> np.ndarray:
    """All-pairs JS divergence: (n, 11) x (k, 11) -> (n, k). Unvalidated."""
    p = p_rows[:, None, :]
    q = q_rows[None, :, :]
    m = 0.5 * (p + q)
    with np.errstate(divide="ignore", invalid="ignore"):
        tp = np.where(p > 0, p * np.log(p / m), 0.0)
        tq = np.where(q > 0, q * np.log(q / m), 0.0)
    return np.maximum(0.0, 0.5 * tp.sum(axis=2) + 0.5 * tq.sum(axis=2))


def sorted_profile(p) -> np.ndarray:
    """Weights sorted in descending order, discarding color identity."""
    p = as_distribution(p)
    return np.sort(p)[::-1].copy()
