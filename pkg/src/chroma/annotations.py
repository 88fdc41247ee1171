"""Crowdsourced rating aggregation, quality control, and data splits.

Raw per-worker ratings (1-5 per color) become per-object ground-truth
distributions in three steps: a control-object gate on whole submissions,
an iterative per-object filter that drops annotations ranked against the
consensus, and averaging of the survivors. Splitting is stratified by
object group and deterministic per seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import colors
from .errors import ValidationError
from .ranks import kendall

CONTROL_OBJECT = "spinach"
_GREEN = colors.color_index("green")

GROUPS = ("single", "multi", "any")
SPLITS = ("train", "val", "test")

# Fractions behind the published split sizes: floor(0.6 n) train,
# floor(0.2 n) val, remainder test, applied per group.
TRAIN_FRAC = 0.6
VAL_FRAC = 0.2


@dataclass(frozen=True)
class AnnotationRecord:
    """One worker's rating of one object.

    Ratings are 0-5 per color: 0 for colors the worker did not select,
    1-5 for the rated frequency of the selected colors. ``ratings=None``
    means the worker skipped the object.
    """

    worker_id: str
    object_id: str
    ratings: tuple[int, ...] | None
    elapsed: float | None = None

    def __post_init__(self):
        if self.ratings is not None:
            if len(self.ratings) != colors.N_COLORS:
                raise ValidationError(
                    f"annotation for {self.object_id!r} has {len(self.ratings)} ratings"
                )
            if any(r not in (0, 1, 2, 3, 4, 5) for r in self.ratings):
                raise ValidationError(
                    f"annotation for {self.object_id!r} has ratings outside 0..5"
                )
            if all(r == 0 for r in self.ratings):
                raise ValidationError(
                    f"annotation for {self.object_id!r} selects no colors"
                )

    @property
    def skipped(self) -> bool:
        return self.ratings is None

    def distribution(self) -> np.ndarray:
        if self.ratings is None:
            raise ValidationError("skipped annotation has no distribution")
        return colors.normalize(np.asarray(self.ratings, dtype=np.float64))


@dataclass(frozen=True)
class HitSubmission:
    worker_id: str
    records: tuple[AnnotationRecord, ...]
    control_object_id: str = CONTROL_OBJECT


@dataclass
class ObjectRecord:
    object_id: str
    singular: str
    plural: str
    ground_truth: np.ndarray
    n_annotations: int
    annotations: tuple[AnnotationRecord, ...] = ()
    group: str | None = None  # one of GROUPS once assigned
    split: str | None = None  # one of SPLITS once assigned


@dataclass(frozen=True)
class HitDecision:
    accepted: bool
    reason: str | None = None


def validate_hit(sub: HitSubmission) -> HitDecision:
    """Accept a submission iff its control rating is strictly majority green."""
    controls = [r for r in sub.records if r.object_id == sub.control_object_id]
    if len(controls) > 1:
        return HitDecision(False, "duplicate control")
    if not controls or controls[0].skipped:
        return HitDecision(False, "no control")
    share = float(controls[0].distribution()[_GREEN])
    if share > 0.5:
        return HitDecision(True)
    return HitDecision(False, f"control green share {share:.4f} not > 0.5")


@dataclass
class RemovedAnnotation:
    record: AnnotationRecord
    round: int
    tau: float


@dataclass
class AggregateResult:
    ground_truth: np.ndarray
    retained: list[AnnotationRecord]
    removed: list[RemovedAnnotation]


def aggregate_object(anns: list[AnnotationRecord]) -> AggregateResult:
    """Average annotations into a ground truth, filtering adversarial ones.

    Each round recomputes the mean of the surviving normalized ratings and
    simultaneously drops every annotation whose Kendall tau against that
    mean is < 0 (undefined tau, e.g. an all-equal rating, is kept). Stops
    when a round removes nothing.
    """
    live = [a for a in anns if not a.skipped]
    if not live:
        raise ValidationError("object unusable: no usable annotations")
    removed: list[RemovedAnnotation] = []
    rnd = 0
    while True:
        rnd += 1
        dists = np.stack([a.distribution() for a in live])
        mean = dists.mean(axis=0)
        taus = [kendall(d, mean) for d in dists]
        drop = [i for i, t in enumerate(taus) if t is not None and t < 0.0]
        if not drop:
            return AggregateResult(ground_truth=mean, retained=live, removed=removed)
        drop_set = set(drop)
        for i in drop:
            removed.append(RemovedAnnotation(live[i], rnd, taus[i]))
        live = [a for i, a in enumerate(live) if i not in drop_set]
        if not live:
            raise ValidationError("object unusable: all annotations removed")


@dataclass
class QCReport:
    n_hits: int = 0
    n_accepted: int = 0
    rejected_hits: list[dict] = field(default_factory=list)
    removed_annotations: list[dict] = field(default_factory=list)
    n_skipped_annotations: int = 0

    def to_dict(self) -> dict:
        return {
            "n_hits": self.n_hits,
            "n_accepted": self.n_accepted,
            "rejected_hits": self.rejected_hits,
            "removed_annotations": self.removed_annotations,
            "n_skipped_annotations": self.n_skipped_annotations,
        }


def assemble_dataset(
    hits: list[HitSubmission],
    lexicon: dict[str, tuple[str, str]],
) -> tuple[list[ObjectRecord], QCReport]:
    """Gate submissions, aggregate per object, and build dataset records.

    ``lexicon`` maps object id -> (singular, plural); every annotated object
    must be present.
    """
    report = QCReport(n_hits=len(hits))
    by_object: dict[str, list[AnnotationRecord]] = {}
    for sub in hits:
        decision = validate_hit(sub)
        if not decision.accepted:
            report.rejected_hits.append(
                {"worker_id": sub.worker_id, "reason": decision.reason}
            )
            continue
        report.n_accepted += 1
        for rec in sub.records:
            if rec.skipped:
                report.n_skipped_annotations += 1
                continue
            if rec.object_id not in lexicon:
                raise ValidationError(f"unknown object id: {rec.object_id!r}")
            by_object.setdefault(rec.object_id, []).append(rec)

    records: list[ObjectRecord] = []
    for object_id in sorted(by_object):
        try:
            agg = aggregate_object(by_object[object_id])
        except ValidationError as exc:
            raise ValidationError(f"{exc} (object {object_id!r})") from exc
        for rem in agg.removed:
            report.removed_annotations.append(
                {
                    "object": object_id,
                    "worker_id": rem.record.worker_id,
                    "round": rem.round,
                    "tau": rem.tau,
                }
            )
        singular, plural = lexicon[object_id]
        records.append(
            ObjectRecord(
                object_id=object_id,
                singular=singular,
                plural=plural,
                ground_truth=agg.ground_truth,
                n_annotations=len(agg.retained),
                annotations=tuple(agg.retained),
            )
        )
    return records, report


def split_counts(n: int, train_frac: float = TRAIN_FRAC, val_frac: float = VAL_FRAC):
    """(train, val, test) sizes for a group of ``n`` objects."""
    n_train = int(np.floor(n * train_frac))
    n_val = int(np.floor(n * val_frac))
    n_test = n - n_train - n_val
    return n_train, n_val, n_test


def make_splits(
    objects: list[ObjectRecord],
    seed: int,
    train_frac: float = TRAIN_FRAC,
    val_frac: float = VAL_FRAC,
) -> dict[str, str]:
    """Stratified train/val/test assignment, deterministic per seed.

    Objects are shuffled within each group; sizes come from
    :func:`split_counts`. Returns object id -> split name.
    """
    missing = [o.object_id for o in objects if o.group is None]
    if missing:
        raise ValidationError(
            f"{len(missing)} objects have no group label (e.g. {missing[0]!r})"
        )
    bad = [o.object_id for o in objects if o.group not in GROUPS]
    if bad:
        raise ValidationError(f"unknown group label on object {bad[0]!r}")
    rng = np.random.default_rng(seed)
    assignment: dict[str, str] = {}
    for group in GROUPS:
        ids = sorted(o.object_id for o in objects if o.group == group)
        if not ids:
            continue
        n_train, n_val, n_test = split_counts(len(ids), train_frac, val_frac)
        if min(n_train, n_val, n_test) < 1:
            raise ValidationError(
                f"group {group!r} has {len(ids)} objects, too few to split"
            )
        perm = rng.permutation(len(ids))
        shuffled = [ids[i] for i in perm]
        for oid in shuffled[:n_train]:
            assignment[oid] = "train"
        for oid in shuffled[n_train : n_train + n_val]:
            assignment[oid] = "val"
        for oid in shuffled[n_train + n_val :]:
            assignment[oid] = "test"
    return assignment
