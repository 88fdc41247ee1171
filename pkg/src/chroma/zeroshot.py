"""Scoring and evaluation of zero-shot color predictions.

Externally produced model scores (log-probabilities per color) are turned
into distributions by softmax, the best template per object is selected by
Kendall tau against the ground truth, and the usual metric suite is
aggregated per object group: Spearman rho, Kendall tau, top-1 accuracy,
JS divergence, correlation deltas against an n-gram baseline, and the
rho/tau average. Correlations are reported in the x100 convention.

Undefined correlations (a constant vector on either side) are carried as
None and excluded from aggregates with explicit counters, never coerced
to 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import colors
from .errors import ValidationError
from .ranks import kendall, spearman


@dataclass
class PredictionSet:
    """Scores keyed by (object, template); each value is an 11-vector of
    log-probabilities aligned to the color order."""

    entries: dict[tuple[str, str], np.ndarray] = field(default_factory=dict)

    def add(self, object_id: str, template_id: str, scores: np.ndarray) -> None:
        self.entries[(object_id, template_id)] = scores

    def objects(self) -> list[str]:
        return sorted({o for o, _ in self.entries})

    def templates_for(self, object_id: str) -> list[str]:
        return sorted(t for o, t in self.entries if o == object_id)


def to_distribution(scores, family: str | None = None) -> np.ndarray:
    """Softmax over the 11 scores; the argmax of the result equals the
    argmax of the raw scores. ``family`` is accepted for symmetry with the
    file formats and does not change the computation."""
    del family
    s = np.asarray(scores, dtype=np.float64)
    if s.shape != (colors.N_COLORS,):
        raise ValidationError(f"expected {colors.N_COLORS} scores, got shape {s.shape}")
    if not np.all(np.isfinite(s)):
        raise ValidationError("non-finite score")
    z = s - s.max()
    e = np.exp(z)
    return e / e.sum()


def acc_at_1(pred, gt) -> bool:
    """Modal-color agreement; ties resolve to the lowest canonical index."""
    p = colors.as_distribution(pred)
    g = colors.as_distribution(gt)
    return int(np.argmax(p)) == int(np.argmax(g))


def best_template(
    dists: dict[str, np.ndarray], gt: np.ndarray
) -> tuple[str, np.ndarray]:
    """Template whose distribution has the highest Kendall tau against the
    ground truth; ties break by template id order."""
    if not dists:
        raise ValidationError("no templates to choose from")
    best_id = None
    best_tau = None
    for template_id in sorted(dists):
        tau = kendall(dists[template_id], gt)
        if tau is None:
            continue
        if best_tau is None or tau > best_tau:
            best_id, best_tau = template_id, tau
    if best_id is None:
        raise ValidationError("all template correlations undefined")
    return best_id, dists[best_id]


def delta_correlations(
    model_corr: float | None, ngram_corr: float | None
) -> float | None:
    """100 * (model - ngram) correlation difference; None if either side is
    missing. 0 means the model exactly matches the n-gram baseline."""
    if model_corr is None or ngram_corr is None:
        return None
    return 100.0 * (model_corr - ngram_corr)


def avg_correlation(rho: float | None, tau: float | None) -> float | None:
    """Per-object mean of the two rank coefficients; None unless both exist."""
    if rho is None or tau is None:
        return None
    return 0.5 * (rho + tau)


@dataclass
class ObjectEval:
    object_id: str
    group: str | None
    template_id: str
    prediction: np.ndarray
    rho: float | None
    tau: float | None
    acc1: bool
    d_js: float
    rho_ngram: float | None = None
    tau_ngram: float | None = None
    delta_rho: float | None = None
    delta_tau: float | None = None
    avg_corr: float | None = None


@dataclass
class GroupStats:
    group: str
    n_objects: int
    rho_mean: float | None
    rho_std: float | None
    tau_mean: float | None
    tau_std: float | None
    acc_at_1: float  # percentage
    d_js_mean: float
    d_js_std: float
    avg_corr_mean: float | None
    avg_corr_std: float | None
    delta_rho_mean: float | None = None
    delta_tau_mean: float | None = None
    n_undefined_corr: int = 0
    n_excluded_delta: int = 0


@dataclass
class MetricReport:
    rows: list[ObjectEval]
    groups: list[GroupStats]
    n_no_template: int  # objects where every template correlation was undefined
    n_no_ngram: int  # objects without a usable n-gram distribution


def _mean_std(values: list[float]) -> tuple[float | None, float | None]:
    if not values:
        return None, None
    arr = np.asarray(values)
    return float(arr.mean()), float(arr.std())


def _summarize(group: str, rows: list[ObjectEval]) -> GroupStats:
    rho100 = [100.0 * r.rho for r in rows if r.rho is not None]
    tau100 = [100.0 * r.tau for r in rows if r.tau is not None]
    avg100 = [100.0 * r.avg_corr for r in rows if r.avg_corr is not None]
    djs = [r.d_js for r in rows]
    deltas_rho = [r.delta_rho for r in rows if r.delta_rho is not None]
    deltas_tau = [r.delta_tau for r in rows if r.delta_tau is not None]
    rho_mean, rho_std = _mean_std(rho100)
    tau_mean, tau_std = _mean_std(tau100)
    avg_mean, avg_std = _mean_std(avg100)
    djs_mean, djs_std = _mean_std(djs)
    return GroupStats(
        group=group,
        n_objects=len(rows),
        rho_mean=rho_mean,
        rho_std=rho_std,
        tau_mean=tau_mean,
        tau_std=tau_std,
        acc_at_1=100.0 * float(np.mean([r.acc1 for r in rows])),
        d_js_mean=djs_mean,
        d_js_std=djs_std,
        avg_corr_mean=avg_mean,
        avg_corr_std=avg_std,
        delta_rho_mean=float(np.mean(deltas_rho)) if deltas_rho else None,
        delta_tau_mean=float(np.mean(deltas_tau)) if deltas_tau else None,
        n_undefined_corr=sum(1 for r in rows if r.tau is None),
        n_excluded_delta=sum(1 for r in rows if r.delta_tau is None),
    )


def evaluate(
    preds: PredictionSet,
    dataset,
    corpus_dists: dict[str, np.ndarray | None] | None = None,
) -> MetricReport:
    """Full metric suite over a dataset of ObjectRecords.

    Every dataset object must be covered by the prediction set. When every
    template correlation for an object is undefined, the first template by
    id is used and the object's correlations stay undefined.
    """
    records = sorted(dataset, key=lambda r: r.object_id)
    gaps = [r.object_id for r in records if not preds.templates_for(r.object_id)]
    if gaps:
        raise ValidationError(
            f"predictions missing for {len(gaps)} objects: {', '.join(gaps[:10])}"
        )

    rows: list[ObjectEval] = []
    n_no_template = 0
    n_no_ngram = 0
    for rec in records:
        gt = colors.as_distribution(rec.ground_truth, renormalize=True)
        dists = {
            t: to_distribution(preds.entries[(rec.object_id, t)])
            for t in preds.templates_for(rec.object_id)
        }
        try:
            template_id, pred = best_template(dists, gt)
        except ValidationError:
            n_no_template += 1
            template_id = sorted(dists)[0]
            pred = dists[template_id]
        rho = spearman(pred, gt)
        tau = kendall(pred, gt)
        row = ObjectEval(
            object_id=rec.object_id,
            group=rec.group,
            template_id=template_id,
            prediction=pred,
            rho=rho,
            tau=tau,
            acc1=acc_at_1(pred, gt),
            d_js=colors.js_divergence(pred, gt),
            avg_corr=avg_correlation(rho, tau),
        )
        if corpus_dists is not None:
            nd = corpus_dists.get(rec.object_id)
            if nd is None:
                n_no_ngram += 1
            else:
                row.rho_ngram = spearman(nd, gt)
                row.tau_ngram = kendall(nd, gt)
                row.delta_rho = delta_correlations(rho, row.rho_ngram)
                row.delta_tau = delta_correlations(tau, row.tau_ngram)
        rows.append(row)

    groups: list[GroupStats] = []
    present = [g for g in ("single", "multi", "any") if any(r.group == g for r in rows)]
    for g in present:
        groups.append(_summarize(g, [r for r in rows if r.group == g]))
    leftovers = [r for r in rows if r.group not in ("single", "multi", "any")]
    if leftovers:
        groups.append(_summarize("(ungrouped)", leftovers))
    groups.append(_summarize("all", rows))

    return MetricReport(
        rows=rows, groups=groups, n_no_template=n_no_template, n_no_ngram=n_no_ngram
    )
