"""File formats: JSON Lines data files, lexicons, reports, and manifests.

Color-indexed arrays in every file follow the canonical vocabulary order.
Loaders validate eagerly and raise InputFormatError for structural
problems; semantic violations (bad distributions, unknown labels) raise
ValidationError. ``validate_file`` runs the same checks and additionally
collects non-fatal warnings.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterator

import numpy as np

from . import colors
from .annotations import GROUPS, SPLITS, AnnotationRecord, HitSubmission, ObjectRecord
from .errors import InputFormatError, ValidationError
from .ngrams import ObjectColorCounts
from .probing import EmbeddingSet
from .zeroshot import PredictionSet


def read_jsonl(path: str | Path) -> Iterator[tuple[int, dict]]:
    """Yield (line_number, object) pairs; blank lines are skipped."""
    p = Path(path)
    try:
        with open(p, "rt", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise InputFormatError(f"{p}:{lineno}: invalid JSON: {exc}") from exc
                if not isinstance(obj, dict):
                    raise InputFormatError(f"{p}:{lineno}: expected a JSON object")
                yield lineno, obj
    except OSError as exc:
        raise InputFormatError(f"cannot read {p}: {exc}") from exc


def write_jsonl(rows: list[dict], path: str | Path) -> None:
    with open(path, "wt", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")


def _require(obj: dict, key: str, where: str):
    if key not in obj:
        raise InputFormatError(f"{where}: missing field {key!r}")
    return obj[key]


# -- raw annotations ---------------------------------------------------------


def load_hits(path: str | Path) -> list[HitSubmission]:
    """One submission per line: {"worker_id", "control", "records": [...]}."""
    hits = []
    for lineno, obj in read_jsonl(path):
        where = f"{path}:{lineno}"
        worker = str(_require(obj, "worker_id", where))
        control = str(obj.get("control", "spinach"))
        records = []
        for rec in _require(obj, "records", where):
            ratings = rec.get("ratings")
            records.append(
                AnnotationRecord(
                    worker_id=worker,
                    object_id=str(_require(rec, "object", where)),
                    ratings=tuple(int(r) for r in ratings) if ratings is not None else None,
                    elapsed=rec.get("seconds"),
                )
            )
        hits.append(HitSubmission(worker_id=worker, records=tuple(records), control_object_id=control))
    return hits


# -- lexicon -----------------------------------------------------------------


def load_lexicon(path: str | Path) -> dict[str, tuple[str, str]]:
    """JSON object mapping object id -> [singular, plural]."""
    p = Path(path)
    try:
        data = json.loads(p.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InputFormatError(f"cannot read lexicon {p}: {exc}") from exc
    if not isinstance(data, dict):
        raise InputFormatError(f"lexicon {p} must be a JSON object")
    lex = {}
    for oid, forms in data.items():
        if not isinstance(forms, (list, tuple)) or len(forms) != 2:
            raise InputFormatError(f"lexicon {p}: entry {oid!r} must be [singular, plural]")
        lex[str(oid)] = (str(forms[0]), str(forms[1]))
    return lex


# -- dataset -----------------------------------------------------------------


def dataset_to_rows(records: list[ObjectRecord]) -> list[dict]:
    rows = []
    for r in records:
        rows.append(
            {
                "object": r.object_id,
                "singular": r.singular,
                "plural": r.plural,
                "gt": [float(x) for x in r.ground_truth],
                "group": r.group,
                "split": r.split,
                "n_annotations": r.n_annotations,
            }
        )
    return rows


def write_dataset(records: list[ObjectRecord], path: str | Path) -> None:
    write_jsonl(dataset_to_rows(records), path)


def load_dataset(path: str | Path) -> list[ObjectRecord]:
    records = []
    seen = set()
    for lineno, obj in read_jsonl(path):
        where = f"{path}:{lineno}"
        oid = str(_require(obj, "object", where))
        if oid in seen:
            raise ValidationError(f"{where}: duplicate object {oid!r}")
        seen.add(oid)
        gt = _require(obj, "gt", where)
        try:
            ground_truth = colors.as_distribution(gt, renormalize=True)
        except ValidationError as exc:
            raise ValidationError(f"{where}: {exc}") from exc
        group = obj.get("group")
        if group is not None and group not in GROUPS:
            raise ValidationError(f"{where}: unknown group {group!r}")
        split = obj.get("split")
        if split is not None and split not in SPLITS:
            raise ValidationError(f"{where}: unknown split {split!r}")
        records.append(
            ObjectRecord(
                object_id=oid,
                singular=str(_require(obj, "singular", where)),
                plural=str(_require(obj, "plural", where)),
                ground_truth=ground_truth,
                n_annotations=int(obj.get("n_annotations", 0)),
                group=group,
                split=split,
            )
        )
    return records


# -- corpus distribution file ------------------------------------------------


@dataclass
class CorpusEntry:
    object_id: str
    phi_o: int
    phi_co: np.ndarray
    freq: float | None
    dist: np.ndarray | None


def corpus_to_rows(entries: list[CorpusEntry]) -> list[dict]:
    rows = []
    for e in entries:
        rows.append(
            {
                "object": e.object_id,
                "phi_o": int(e.phi_o),
                "phi_co": [int(x) for x in e.phi_co],
                "freq": e.freq,
                "dist": [float(x) for x in e.dist] if e.dist is not None else None,
            }
        )
    return rows


def write_corpus_file(entries: list[CorpusEntry], path: str | Path) -> None:
    write_jsonl(corpus_to_rows(entries), path)


def load_corpus_file(path: str | Path) -> dict[str, CorpusEntry]:
    entries = {}
    for lineno, obj in read_jsonl(path):
        where = f"{path}:{lineno}"
        oid = str(_require(obj, "object", where))
        phi_co = np.asarray(_require(obj, "phi_co", where), dtype=np.int64)
        if phi_co.shape != (colors.N_COLORS,) or np.any(phi_co < 0):
            raise ValidationError(f"{where}: phi_co must be 11 non-negative counts")
        dist = obj.get("dist")
        entries[oid] = CorpusEntry(
            object_id=oid,
            phi_o=int(_require(obj, "phi_o", where)),
            phi_co=phi_co,
            freq=obj.get("freq"),
            dist=colors.as_distribution(dist, renormalize=True) if dist is not None else None,
        )
    return entries


def counts_to_entry(c: ObjectColorCounts) -> CorpusEntry:
    from .ngrams import color_distribution, color_freq

    return CorpusEntry(
        object_id=c.object_id,
        phi_o=c.phi_o,
        phi_co=c.phi_co,
        freq=color_freq(c),
        dist=color_distribution(c),
    )


# -- predictions and embeddings ----------------------------------------------


def load_predictions(path: str | Path) -> PredictionSet:
    """JSONL of {"object", "template", "color", "score"}; every (object,
    template) pair must cover all 11 colors exactly once."""
    raw: dict[tuple[str, str], dict[str, float]] = {}
    for lineno, obj in read_jsonl(path):
        where = f"{path}:{lineno}"
        key = (str(_require(obj, "object", where)), str(_require(obj, "template", where)))
        color = str(_require(obj, "color", where))
        if color not in colors.COLORS:
            raise ValidationError(f"{where}: unknown color {color!r}")
        score = float(_require(obj, "score", where))
        if not np.isfinite(score):
            raise ValidationError(f"{where}: non-finite score")
        slot = raw.setdefault(key, {})
        if color in slot:
            raise ValidationError(f"{where}: duplicate color {color!r} for {key}")
        slot[color] = score
    preds = PredictionSet()
    for key in sorted(raw):
        scores = raw[key]
        missing = [c for c in colors.COLORS if c not in scores]
        if missing:
            raise ValidationError(
                f"{path}: {key} lacks scores for {', '.join(missing)}"
            )
        preds.add(key[0], key[1], np.array([scores[c] for c in colors.COLORS]))
    return preds


def write_predictions(preds: PredictionSet, path: str | Path) -> None:
    rows = []
    for (obj, tmpl) in sorted(preds.entries):
        for ci, color in enumerate(colors.COLORS):
            rows.append(
                {
                    "object": obj,
                    "template": tmpl,
                    "color": color,
                    "score": float(preds.entries[(obj, tmpl)][ci]),
                }
            )
    write_jsonl(rows, path)


def load_embeddings(path: str | Path) -> EmbeddingSet:
    """JSONL of {"object", "template", "vector"}; the dimension is set by
    the first line and enforced on the rest."""
    embs = EmbeddingSet()
    for lineno, obj in read_jsonl(path):
        where = f"{path}:{lineno}"
        vec = np.asarray(_require(obj, "vector", where), dtype=np.float64)
        try:
            embs.add(str(_require(obj, "object", where)), str(_require(obj, "template", where)), vec)
        except ValidationError as exc:
            raise ValidationError(f"{where}: {exc}") from exc
    if not embs.entries:
        raise ValidationError(f"{path}: no embeddings")
    return embs


def write_embeddings(embs: EmbeddingSet, path: str | Path) -> None:
    rows = [
        {"object": o, "template": t, "vector": [float(x) for x in embs.entries[(o, t)]]}
        for (o, t) in sorted(embs.entries)
    ]
    write_jsonl(rows, path)


# -- prompts (adapter input) ---------------------------------------------------


def write_prompts(prompts, path: str | Path) -> None:
    write_jsonl([p.to_dict() for p in prompts], path)


# -- CSV helpers ---------------------------------------------------------------


def fmt_float(x: Any) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".10g")


def write_csv(path: str | Path, header: list[str], rows: list[list]) -> None:
    with open(path, "wt", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt_float(v) if not isinstance(v, str) else v for v in row) + "\n")


# -- manifest ------------------------------------------------------------------


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(
    out_dir: str | Path, command: str, config: dict, inputs: list[str | Path]
) -> None:
    """Reproducibility record: config, input digests, toolkit version.

    The manifest carries a timestamp and is therefore not one of a
    command's byte-stable primary outputs.
    """
    import datetime

    from . import __version__

    manifest = {
        "command": command,
        "config": config,
        "inputs": {str(p): sha256_file(p) for p in inputs if Path(p).is_file()},
        "version": __version__,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    with open(Path(out_dir) / "manifest.json", "wt", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")


# -- validation ----------------------------------------------------------------

VALIDATE_KINDS = ("hits", "dataset", "corpus", "predictions", "embeddings", "templates", "prompts")


def validate_file(kind: str, path: str | Path) -> list[str]:
    """Load ``path`` as ``kind``, returning non-fatal warnings. Structural
    and semantic errors raise as usual."""
    warnings: list[str] = []
    if kind == "hits":
        load_hits(path)
    elif kind == "dataset":
        records = load_dataset(path)
        missing_group = sum(1 for r in records if r.group is None)
        missing_split = sum(1 for r in records if r.split is None)
        if missing_group:
            warnings.append(f"{missing_group} objects have no group label")
        if missing_split:
            warnings.append(f"{missing_split} objects have no split")
    elif kind == "corpus":
        entries = load_corpus_file(path)
        high = [e.object_id for e in entries.values() if e.freq is not None and e.freq > 100]
        if high:
            warnings.append(
                f"{len(high)} objects have color frequency above 100 percent "
                f"(e.g. {high[0]!r}); counts may overlap"
            )
    elif kind == "predictions":
        load_predictions(path)
    elif kind == "embeddings":
        load_embeddings(path)
    elif kind == "templates":
        from .templates import load_templates

        load_templates(path)
    elif kind == "prompts":
        for lineno, obj in read_jsonl(path):
            where = f"{path}:{lineno}"
            _require(obj, "object", where)
            _require(obj, "template", where)
            _require(obj, "text", where)
            if "color" in obj and obj["color"] not in colors.COLORS:
                raise ValidationError(f"{where}: unknown color {obj['color']!r}")
    else:
        raise ValidationError(f"unknown file kind {kind!r}")
    return warnings
