"""Streaming n-gram counting and reporting-bias statistics.

Counts 1-3 token n-grams from three shard formats, then attributes
color-object collocations: phi(o) sums the counts of an object's surface
forms and phi(c, o) the counts of each color immediately preceding them.
From those, Freq(o) = 100/phi(o) * sum_c phi(c, o) and the corpus color
distribution P(c|o) = phi(c, o) / sum_c phi(c, o).
"""

from __future__ import annotations

import gzip
import string
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from . import colors
from .errors import InputFormatError, ValidationError

FORMATS = ("google_ngram", "plain_tsv", "raw_text")
MAX_ORDER = 3
_SENTENCE_ENDERS = ".!?\n"
_STRIP_CHARS = string.punctuation + "“”‘’"

KeepFn = Callable[[tuple[str, ...]], bool]


@dataclass
class NgramTable:
    """Counts keyed by lowercase token tuples; merging is entrywise addition."""

    counts: Counter = field(default_factory=Counter)

    def add(self, tokens: tuple[str, ...], count: int = 1) -> None:
        self.counts[tokens] += count

    def count(self, tokens: tuple[str, ...]) -> int:
        return self.counts.get(tokens, 0)

    def merge(self, other: "NgramTable") -> "NgramTable":
        self.counts.update(other.counts)
        return self

    def __len__(self) -> int:
        return len(self.counts)


@dataclass
class IngestReport:
    n_lines: int = 0
    n_malformed: int = 0
    malformed_samples: list[str] = field(default_factory=list)
    n_skipped_tagged: int = 0  # google entries with part-of-speech tags
    n_skipped_long: int = 0  # n-grams above MAX_ORDER

    def merge(self, other: "IngestReport") -> "IngestReport":
        self.n_lines += other.n_lines
        self.n_malformed += other.n_malformed
        self.malformed_samples.extend(
            other.malformed_samples[: max(0, 10 - len(self.malformed_samples))]
        )
        self.n_skipped_tagged += other.n_skipped_tagged
        self.n_skipped_long += other.n_skipped_long
        return self

    def to_dict(self) -> dict:
        return {
            "n_lines": self.n_lines,
            "n_malformed": self.n_malformed,
            "malformed_samples": self.malformed_samples,
            "n_skipped_tagged": self.n_skipped_tagged,
            "n_skipped_long": self.n_skipped_long,
        }


def tokenize_text(text: str) -> list[list[str]]:
    """Sentence-segmented tokens: lowercase, whitespace split, punctuation
    stripped from token edges. N-grams never cross sentence boundaries."""
    sentences: list[list[str]] = []
    current = ""
    for ch in text:
        if ch in _SENTENCE_ENDERS:
            sentences.append(current)
            current = ""
        else:
            current += ch
    sentences.append(current)
    out = []
    for sent in sentences:
        tokens = [t.strip(_STRIP_CHARS) for t in sent.lower().split()]
        tokens = [t for t in tokens if t]
        if tokens:
            out.append(tokens)
    return out


def _count_text_line(line: str, table: NgramTable, keep: KeepFn | None) -> None:
    for tokens in tokenize_text(line):
        for n in range(1, MAX_ORDER + 1):
            for i in range(len(tokens) - n + 1):
                gram = tuple(tokens[i : i + n])
                if keep is None or keep(gram):
                    table.add(gram)


def _ingest_stream(
    lines: Iterable[str], fmt: str, keep: KeepFn | None
) -> tuple[NgramTable, IngestReport]:
    table = NgramTable()
    report = IngestReport()
    for line in lines:
        report.n_lines += 1
        line = line.rstrip("\n")
        if fmt == "raw_text":
            _count_text_line(line, table, keep)
            continue
        if not line.strip():
            continue
        parts = line.split("\t")
        try:
            if fmt == "google_ngram":
                # ngram TAB year TAB match_count TAB volume_count
                if len(parts) != 4:
                    raise ValueError("expected 4 tab-separated fields")
                gram = tuple(t.lower() for t in parts[0].split(" ") if t)
                count = int(parts[2])
                int(parts[1])  # year must parse even though it is aggregated away
            else:  # plain_tsv: ngram TAB count
                if len(parts) != 2:
                    raise ValueError("expected 2 tab-separated fields")
                gram = tuple(t.lower() for t in parts[0].split(" ") if t)
                count = int(parts[1])
            if not gram or count < 0:
                raise ValueError("empty ngram or negative count")
        except ValueError as exc:
            report.n_malformed += 1
            if len(report.malformed_samples) < 10:
                report.malformed_samples.append(f"line {report.n_lines}: {exc}")
            continue
        if fmt == "google_ngram" and any("_" in t for t in gram):
            report.n_skipped_tagged += 1
            continue
        if len(gram) > MAX_ORDER:
            report.n_skipped_long += 1
            continue
        if keep is None or keep(gram):
            table.add(gram, count)
    return table, report


def _open_shard(path: Path):
    if str(path).endswith(".gz"):
        return gzip.open(path, "rt", encoding="utf-8")
    return open(path, "rt", encoding="utf-8")


def ingest(
    shards: list[str | Path],
    fmt: str,
    keep: KeepFn | None = None,
    threads: int = 1,
) -> tuple[NgramTable, IngestReport]:
    """Count n-grams across shards and merge; the result is independent of
    shard order and of how the input is partitioned.

    Malformed lines are skipped and tallied in the report; an unreadable
    shard is a hard error. ``keep`` optionally restricts which n-grams are
    retained (a memory valve for large corpora; counts of kept n-grams are
    unaffected).
    """
    if fmt not in FORMATS:
        raise ValidationError(f"unknown shard format {fmt!r}")
    if not shards:
        raise ValidationError("no input shards")
    paths = [Path(s) for s in shards]

    def run(path: Path) -> tuple[NgramTable, IngestReport]:
        try:
            with _open_shard(path) as fh:
                return _ingest_stream(fh, fmt, keep)
        except OSError as exc:
            raise InputFormatError(f"cannot read shard {path}: {exc}") from exc

    if threads > 1 and len(paths) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, paths))
    else:
        results = [run(p) for p in paths]

    table = NgramTable()
    report = IngestReport()
    for t, r in results:  # fixed shard order keeps the merge deterministic
        table.merge(t)
        report.merge(r)
    return table, report


@dataclass
class ObjectColorCounts:
    object_id: str
    phi_o: int
    phi_co: np.ndarray  # int counts aligned to the color order

    @property
    def has_data(self) -> bool:
        return self.phi_o > 0


def surface_tokens(form: str) -> tuple[str, ...]:
    tokens = tuple(form.lower().split())
    if not 1 <= len(tokens) <= 2:
        raise ValidationError(f"surface form {form!r} must be 1-2 tokens")
    return tokens


def attribute_colors(
    table: NgramTable, lexicon: dict[str, tuple[str, str]]
) -> dict[str, ObjectColorCounts]:
    """Per-object counts: phi(o) over both surface forms and phi(c, o) for
    each color prefixed to them. Identical singular/plural forms are counted
    once. Objects absent from the table get phi(o) = 0 (flagged downstream)."""
    out: dict[str, ObjectColorCounts] = {}
    for object_id in sorted(lexicon):
        singular, plural = lexicon[object_id]
        forms = {surface_tokens(singular), surface_tokens(plural)}
        phi_o = sum(table.count(f) for f in forms)
        phi_co = np.zeros(colors.N_COLORS, dtype=np.int64)
        for ci, color in enumerate(colors.COLORS):
            phi_co[ci] = sum(table.count((color,) + f) for f in forms)
        out[object_id] = ObjectColorCounts(object_id, phi_o, phi_co)
    return out


def color_freq(c: ObjectColorCounts) -> float | None:
    """Relative color-mention frequency, in percent; None without data."""
    if c.phi_o == 0:
        return None
    return 100.0 / c.phi_o * float(c.phi_co.sum())


def color_distribution(c: ObjectColorCounts) -> np.ndarray | None:
    """Corpus color distribution for an object; None when no color n-gram
    was observed (no-data is a value here, not an error)."""
    total = int(c.phi_co.sum())
    if total == 0:
        return None
    return c.phi_co.astype(np.float64) / total


def frequency_percentiles(values) -> dict[str, float]:
    """25/50/75th percentiles with linear interpolation."""
    vals = np.asarray(list(values), dtype=np.float64)
    if vals.size == 0:
        raise ValidationError("no values to take percentiles of")
    p25, p50, p75 = np.percentile(vals, [25, 50, 75])
    return {"p25": float(p25), "p50": float(p50), "p75": float(p75)}


def lexicon_keep_fn(lexicon: dict[str, tuple[str, str]]) -> KeepFn:
    """Predicate retaining exactly the n-grams `attribute_colors` looks up."""
    forms: set[tuple[str, ...]] = set()
    for singular, plural in lexicon.values():
        forms.add(surface_tokens(singular))
        forms.add(surface_tokens(plural))
    color_set = set(colors.COLORS)

    def keep(gram: tuple[str, ...]) -> bool:
        if gram in forms:
            return True
        return len(gram) >= 2 and gram[0] in color_set and gram[1:] in forms

    return keep
