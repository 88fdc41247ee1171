"""Rank correlations with tie handling.

Color vectors are short (11 entries) and full of ties, so Spearman uses
average ranks and Kendall is the tie-adjusted tau-b. Both return None when
a coefficient is undefined (an input with no rank variation); callers must
handle that explicitly rather than receiving a silent 0.
"""

from __future__ import annotations

import numpy as np


def average_ranks(values) -> np.ndarray:
    """1-based ranks; tied values share the average of their positions."""
    x = np.asarray(values, dtype=np.float64)
    order = np.argsort(x, kind="stable")
    ranks = np.empty(x.shape[0])
    sx = x[order]
    i = 0
    n = x.shape[0]
    while i < n:
        j = i
        while j + 1 < n and sx[j + 1] == sx[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def spearman(x, y) -> float | None:
    """Spearman rho: Pearson correlation of average ranks. None if undefined."""
    rx = average_ranks(x)
    ry = average_ranks(y)
    dx = rx - rx.mean()
    dy = ry - ry.mean()
    sx = float(np.sqrt(np.sum(dx * dx)))
    sy = float(np.sqrt(np.sum(dy * dy)))
    if sx == 0.0 or sy == 0.0:
        return None
    return float(np.sum(dx * dy) / (sx * sy))


def kendall(x, y) -> float | None:
    """Kendall tau-b. None when either input is constant under ties.

    tau-b = S / sqrt((n0 - n1)(n0 - n2)) with S the summed sign products
    over pairs and n1, n2 the tie corrections of each input.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = x.shape[0]
    if n < 2:
        return None
    sx = np.sign(x[:, None] - x[None, :])
    sy = np.sign(y[:, None] - y[None, :])
    s = float(np.sum(sx * sy)) / 2.0

    n0 = n * (n - 1) / 2.0
    n1 = _tie_correction(x)
    n2 = _tie_correction(y)
    denom = (n0 - n1) * (n0 - n2)
    if denom <= 0:
        return None
    return s / float(np.sqrt(denom))


def _tie_correction(v: np.ndarray) -> float:
    _, counts = np.unique(v, return_counts=True)
    return float(np.sum(counts * (counts - 1) / 2.0))
