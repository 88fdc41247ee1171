"""Representation probing with a loss-data accounting of probe quality.

Small MLP probes (affine -> ReLU -> affine -> softmax) are trained on
frozen representation vectors to predict color distributions, across a
logarithmic schedule of training-set sizes with nested subsets per seed.
Held-out loss is the mean JS divergence in nats; training minimizes soft
cross-entropy. From the seed-averaged loss-data curve we compute the
description-length measures: MDL (area under the curve with a prior
segment at size 0), SDL (area above a threshold epsilon), and the epsilon
sample complexity (first scheduled size at or below epsilon).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import colors
from .errors import ValidationError
from .ranks import kendall, spearman
from .zeroshot import avg_correlation, best_template

DEFAULT_SEEDS = (0, 1, 2, 3, 4)


@dataclass
class EmbeddingSet:
    """Vectors keyed by (object, template); constant dimension."""

    entries: dict[tuple[str, str], np.ndarray] = field(default_factory=dict)
    dim: int | None = None

    def add(self, object_id: str, template_id: str, vector: np.ndarray) -> None:
        v = np.asarray(vector, dtype=np.float64)
        if v.ndim != 1:
            raise ValidationError("embedding vectors must be 1-dimensional")
        if not np.all(np.isfinite(v)):
            raise ValidationError(
                f"non-finite embedding component for ({object_id}, {template_id})"
            )
        if self.dim is None:
            self.dim = v.shape[0]
        elif v.shape[0] != self.dim:
            raise ValidationError(
                f"embedding dimension {v.shape[0]} != {self.dim} "
                f"for ({object_id}, {template_id})"
            )
        self.entries[(object_id, template_id)] = v

    def objects(self) -> list[str]:
        return sorted({o for o, _ in self.entries})

    def rows_for(self, object_ids) -> tuple[np.ndarray, list[tuple[str, str]]]:
        keys = sorted(k for k in self.entries if k[0] in set(object_ids))
        if not keys:
            raise ValidationError("no embeddings for the requested objects")
        return np.stack([self.entries[k] for k in keys]), keys


@dataclass(frozen=True)
class ProbeConfig:
    hidden_width: int = 512
    steps: int = 4000
    learning_rate: float = 1e-4
    batch_size: int | None = None  # None -> min(256, n_samples)
    seeds: tuple[int, ...] = DEFAULT_SEEDS
    epsilon: float = 0.1

    def __post_init__(self):
        if self.steps <= 0 or self.learning_rate <= 0 or self.hidden_width <= 0:
            raise ValidationError("steps, learning_rate and hidden_width must be > 0")
        if self.epsilon <= 0:
            raise ValidationError("epsilon must be > 0")
        if not self.seeds:
            raise ValidationError("at least one seed required")


def subset_schedule(n_max: int, k: int = 10) -> tuple[int, ...]:
    """k training-set sizes spaced logarithmically from 1 to n_max
    (ceil of the geometric grid, deduplicated)."""
    if k < 2:
        raise ValidationError("schedule needs at least 2 points")
    if n_max < k:
        raise ValidationError(f"n_max={n_max} below the number of points k={k}")
    exponents = np.arange(k) * (np.log10(n_max) / (k - 1))
    sizes = [int(np.ceil(10.0**e - 1e-12)) for e in exponents]
    sizes[0], sizes[-1] = 1, n_max
    out: list[int] = []
    for s in sizes:
        if not out or s > out[-1]:
            out.append(s)
    return tuple(out)


@dataclass
class Probe:
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    def predict(self, x: np.ndarray) -> np.ndarray:
        """Distributions for a batch of input vectors, shape (n, 11)."""
        h = np.maximum(x @ self.w1 + self.b1, 0.0)
        z = h @ self.w2 + self.b2
        z -= z.max(axis=1, keepdims=True)
        e = np.exp(z)
        return e / e.sum(axis=1, keepdims=True)


def train_probe(x: np.ndarray, targets: np.ndarray, cfg: ProbeConfig, seed: int) -> Probe:
    """Adam on soft cross-entropy; deterministic given (seed, data).

    Batches are sampled with replacement each step. The returned probe maps
    representation vectors to color distributions.
    """
    x = np.asarray(x, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if x.ndim != 2 or targets.shape != (x.shape[0], colors.N_COLORS):
        raise ValidationError(
            f"shape mismatch: inputs {x.shape}, targets {targets.shape}"
        )
    n, d = x.shape
    if n < 1:
        raise ValidationError("no training samples")
    h = cfg.hidden_width
    rng = np.random.default_rng(seed)

    # Standardize by pooled training statistics (scalar mean and std over
    # all entries; per-feature statistics misbehave for one- or two-object
    # subsets). The constants are folded back into the first affine layer
    # below, so the returned probe is a plain affine-relu-affine-softmax
    # map and retraining is insensitive to any fixed rescaling of the
    # inputs.
    mu = float(x.mean())
    sigma = float(x.std())
    if sigma == 0.0:
        sigma = 1.0
    x = (x - mu) / sigma

    params = [
        rng.standard_normal((d, h)) * np.sqrt(2.0 / d),
        np.zeros(h),
        rng.standard_normal((h, colors.N_COLORS)) * np.sqrt(2.0 / h),
        np.zeros(colors.N_COLORS),
    ]
    m = [np.zeros_like(p) for p in params]
    v = [np.zeros_like(p) for p in params]
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    lr = cfg.learning_rate
    batch = cfg.batch_size if cfg.batch_size is not None else min(256, n)
    batch = min(batch, n) if batch > 0 else n

    for step in range(1, cfg.steps + 1):
        idx = rng.integers(0, n, size=batch)
        xb, tb = x[idx], targets[idx]

        w1, b1, w2, b2 = params
        a1 = xb @ w1 + b1
        h1 = np.maximum(a1, 0.0)
        z = h1 @ w2 + b2
        z -= z.max(axis=1, keepdims=True)
        ez = np.exp(z)
        p = ez / ez.sum(axis=1, keepdims=True)

        gz = (p - tb) / batch
        gw2 = h1.T @ gz
        gb2 = gz.sum(axis=0)
        gh = gz @ w2.T
        gh[a1 <= 0.0] = 0.0
        gw1 = xb.T @ gh
        gb1 = gh.sum(axis=0)

        c1 = 1.0 - beta1**step
        c2 = 1.0 - beta2**step
        for i, g in enumerate((gw1, gb1, gw2, gb2)):
            m[i] = beta1 * m[i] + (1 - beta1) * g
            v[i] = beta2 * v[i] + (1 - beta2) * g * g
            params[i] = params[i] - lr * (m[i] / c1) / (np.sqrt(v[i] / c2) + eps)

    w1, b1, w2, b2 = params
    w1_eff = w1 / sigma
    b1_eff = b1 - (mu / sigma) * w1.sum(axis=0)
    return Probe(w1_eff, b1_eff, w2, b2)


@dataclass
class LossDataCurve:
    """Held-out loss per (seed, size), plus the size-0 prior loss of the
    untrained uniform predictor."""

    sizes: tuple[int, ...]
    losses: np.ndarray  # (n_seeds, n_sizes)
    prior_loss: float
    avg_corrs: np.ndarray | None = None  # (n_seeds, n_sizes), NaN when undefined

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.sizes, self.sizes[1:])):
            raise ValidationError("curve sizes must be strictly increasing")
        if self.losses.shape[1] != len(self.sizes):
            raise ValidationError("losses do not match the size schedule")
        if np.any(self.losses < 0) or self.prior_loss < 0:
            raise ValidationError("losses must be non-negative")

    def mean_losses(self) -> np.ndarray:
        return self.losses.mean(axis=0)

    def truncated(self, n_upto: int) -> "LossDataCurve":
        """Restrict the curve to scheduled sizes <= n_upto."""
        keep = [i for i, s in enumerate(self.sizes) if s <= n_upto]
        if not keep:
            raise ValidationError(f"no scheduled size at or below {n_upto}")
        return LossDataCurve(
            sizes=tuple(self.sizes[i] for i in keep),
            losses=self.losses[:, keep],
            prior_loss=self.prior_loss,
            avg_corrs=self.avg_corrs[:, keep] if self.avg_corrs is not None else None,
        )


def _eval_avg_corr(
    probe: Probe,
    x_eval: np.ndarray,
    keys: list[tuple[str, str]],
    targets: dict[str, np.ndarray],
) -> float:
    """Mean per-object (rho+tau)/2 of best-template probe predictions; NaN
    if undefined for every object."""
    preds = probe.predict(x_eval)
    by_object: dict[str, dict[str, np.ndarray]] = {}
    for row, (obj, tmpl) in enumerate(keys):
        by_object.setdefault(obj, {})[tmpl] = preds[row]
    values = []
    for obj in sorted(by_object):
        gt = targets[obj]
        try:
            _, dist = best_template(by_object[obj], gt)
        except ValidationError:
            continue
        ac = avg_correlation(spearman(dist, gt), kendall(dist, gt))
        if ac is not None:
            values.append(ac)
    return float(np.mean(values)) if values else float("nan")


def loss_data_curve(
    embs: EmbeddingSet,
    targets: dict[str, np.ndarray],
    schedule: tuple[int, ...],
    cfg: ProbeConfig,
    train_objects: list[str],
    eval_objects: list[str],
    threads: int = 1,
) -> LossDataCurve:
    """Train probes over nested subset prefixes and record held-out loss.

    Per seed: shuffle the training objects, take prefixes at the scheduled
    sizes (each extending the previous subset), train a fresh probe per
    size, and evaluate mean JS divergence over all held-out (object,
    template) samples. The prior loss is the uniform predictor's mean JS on
    the same samples. Deterministic regardless of thread count.
    """
    train_set = set(train_objects)
    eval_set = set(eval_objects)
    overlap = train_set & eval_set
    if overlap:
        raise ValidationError(
            f"eval objects overlap training objects: {sorted(overlap)[:5]}"
        )
    if schedule[-1] > len(train_set):
        raise ValidationError(
            f"schedule needs {schedule[-1]} training objects, have {len(train_set)}"
        )
    for obj in sorted(train_set | eval_set):
        if obj not in targets:
            raise ValidationError(f"no target distribution for object {obj!r}")

    x_eval, eval_keys = embs.rows_for(sorted(eval_set))
    t_eval = np.stack([targets[o] for o, _ in eval_keys])
    prior_loss = float(
        colors.js_divergence_rows(np.tile(colors.uniform(), (len(eval_keys), 1)), t_eval).mean()
    )

    ordered_train = sorted(train_set)

    def run(seed: int, size_index: int) -> tuple[float, float]:
        seed_rng = np.random.default_rng(seed)
        order = seed_rng.permutation(len(ordered_train))
        subset = [ordered_train[i] for i in order[: schedule[size_index]]]
        x_sub, sub_keys = embs.rows_for(subset)
        t_sub = np.stack([targets[o] for o, _ in sub_keys])
        probe = train_probe(x_sub, t_sub, cfg, seed)
        loss = float(colors.js_divergence_rows(probe.predict(x_eval), t_eval).mean())
        return loss, _eval_avg_corr(probe, x_eval, eval_keys, targets)

    tasks = [(si, s) for si, _ in enumerate(cfg.seeds) for s in range(len(schedule))]
    losses = np.zeros((len(cfg.seeds), len(schedule)))
    corrs = np.full((len(cfg.seeds), len(schedule)), np.nan)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(
                pool.map(lambda t: run(cfg.seeds[t[0]], t[1]), tasks)
            )
    else:
        results = [run(cfg.seeds[si], s) for si, s in tasks]
    for (si, s), (loss, corr) in zip(tasks, results):
        losses[si, s] = loss
        corrs[si, s] = corr

    return LossDataCurve(
        sizes=tuple(schedule), losses=losses, prior_loss=prior_loss, avg_corrs=corrs
    )


def mdl(curve: LossDataCurve) -> float:
    """Description-length accounting: sum of (n_{i+1} - n_i) * L(n_i) over
    the seed-averaged curve, with a segment at n_0 = 0 priced at the prior
    loss."""
    mean = curve.mean_losses()
    ns = (0,) + curve.sizes
    ls = np.concatenate(([curve.prior_loss], mean[:-1]))
    widths = np.diff(ns)
    return float(np.sum(widths * ls))


@dataclass(frozen=True)
class SdlValue:
    value: float
    is_lower_bound: bool  # True when the curve never drops to epsilon

    def __str__(self) -> str:
        return ("> " if self.is_lower_bound else "") + f"{self.value:.6g}"


def sdl(curve: LossDataCurve, epsilon: float) -> SdlValue:
    """Surplus description length: curve area above ``epsilon``. Flagged as
    a lower bound when every accounted loss (prior included) exceeds it."""
    if epsilon <= 0:
        raise ValidationError("epsilon must be > 0")
    mean = curve.mean_losses()
    ns = (0,) + curve.sizes
    ls = np.concatenate(([curve.prior_loss], mean[:-1]))
    widths = np.diff(ns)
    value = float(np.sum(widths * np.maximum(0.0, ls - epsilon)))
    all_above = bool(curve.prior_loss > epsilon and np.all(mean > epsilon))
    return SdlValue(value=value, is_lower_bound=all_above)


@dataclass(frozen=True)
class EscValue:
    value: int
    exceeds_schedule: bool  # True means "> n_max": no scheduled size reached epsilon

    def __str__(self) -> str:
        return ("> " if self.exceeds_schedule else "") + str(self.value)


def esc(curve: LossDataCurve, epsilon: float) -> EscValue:
    """Epsilon sample complexity: smallest scheduled size whose seed-averaged
    loss is <= epsilon, or "> n_max" when none is."""
    if epsilon <= 0:
        raise ValidationError("epsilon must be > 0")
    mean = curve.mean_losses()
    for size, loss in zip(curve.sizes, mean):
        if loss <= epsilon:
            return EscValue(value=size, exceeds_schedule=False)
    return EscValue(value=curve.sizes[-1], exceeds_schedule=True)


def report_sizes(schedule: tuple[int, ...]) -> tuple[int, int]:
    """The two sizes summarized in the report table: the geometric midpoint
    of the schedule and its endpoint."""
    return schedule[(len(schedule) - 1) // 2], schedule[-1]


@dataclass
class ReprReportRow:
    model: str
    n: int
    d_js: float
    mdl: float
    sdl: SdlValue
    esc: EscValue
    avg_corr: float | None


def repr_report(
    curves: dict[str, LossDataCurve],
    epsilon: float,
    baselines: dict[str, dict] | None = None,
) -> tuple[list[ReprReportRow], list[dict]]:
    """Summary rows (per model at the two report sizes) and per-size curve
    rows for plotting. Correlations are reported x100; baseline values, when
    provided per model, are attached to every curve row of that model."""
    if not curves:
        raise ValidationError("no curves to report")
    table: list[ReprReportRow] = []
    curve_rows: list[dict] = []
    for model in sorted(curves):
        curve = curves[model]
        for n in dict.fromkeys(report_sizes(curve.sizes)):
            part = curve.truncated(n)
            idx = curve.sizes.index(n)
            mean_corr = (
                float(np.nanmean(curve.avg_corrs[:, idx]))
                if curve.avg_corrs is not None
                and not np.all(np.isnan(curve.avg_corrs[:, idx]))
                else None
            )
            table.append(
                ReprReportRow(
                    model=model,
                    n=n,
                    d_js=float(curve.mean_losses()[idx]),
                    mdl=mdl(part),
                    sdl=sdl(part, epsilon),
                    esc=esc(part, epsilon),
                    avg_corr=100.0 * mean_corr if mean_corr is not None else None,
                )
            )
        base = (baselines or {}).get(model, {})
        for idx, n in enumerate(curve.sizes):
            corr_col = curve.avg_corrs[:, idx] if curve.avg_corrs is not None else None
            defined = corr_col is not None and not np.all(np.isnan(corr_col))
            row = {
                "model": model,
                "n": n,
                "mean_loss": float(curve.mean_losses()[idx]),
                "std_loss": float(curve.losses[:, idx].std()),
                "mean_avg_corr": 100.0 * float(np.nanmean(corr_col)) if defined else None,
            }
            if "avg_corr" in base:
                row["zero_shot_avg_corr"] = base["avg_corr"]
            if "d_js" in base:
                row["zero_shot_d_js"] = base["d_js"]
            curve_rows.append(row)
    return table, curve_rows
