"""Job orchestration: prompts in, prediction or embedding files out.

Outputs follow the chroma file formats exactly: predictions as one line
per (object, template, color) with a log-probability score, embeddings as
one vector per (object, template). A sidecar ``<out>.meta.json`` records
the model, family, pooling choice, and any multi-token colors.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .prompts import COLORS, PromptRow, base_rows, color_rows, load_prompts
from .scoring import (
    AdapterError,
    LoadedModel,
    embed_text,
    embedding_text,
    load_model,
    masked_color_scores,
    sentence_log_prob,
)

MODES = ("scores", "embeddings")


@dataclass(frozen=True)
class AdapterJob:
    model_id: str
    family: str  # decoder | encoder | clip-text
    mode: str  # scores | embeddings
    prompts_path: str
    out_path: str
    random_init: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise AdapterError(f"unknown mode {self.mode!r}")
        if self.mode == "scores" and self.family == "clip-text":
            raise AdapterError("clip-text models support embeddings mode only")


def _write_meta(job: AdapterJob, lm: LoadedModel, extra: dict) -> None:
    meta = {
        "model": job.model_id,
        "family": job.family,
        "mode": job.mode,
        "random_init": job.random_init,
        "multi_token_colors": lm.multi_token_colors,
        **extra,
    }
    Path(str(job.out_path) + ".meta.json").write_text(
        json.dumps(meta, indent=2) + "\n", encoding="utf-8"
    )


def _score_decoder(lm: LoadedModel, rows: list[PromptRow], out) -> int:
    filled = color_rows(rows)
    if not filled:
        raise AdapterError(
            "decoder scoring needs color-substituted prompt rows "
            "(expand the templates with the decoder family)"
        )
    cache: dict[str, float] = {}
    n = 0
    for key in sorted(filled):
        by_color = filled[key]
        missing = [c for c in COLORS if c not in by_color]
        if missing:
            raise AdapterError(f"{key}: prompt rows missing colors {missing}")
        for color in COLORS:
            text = by_color[color]
            if text not in cache:
                cache[text] = sentence_log_prob(lm, text)
            out.write(
                json.dumps(
                    {"object": key[0], "template": key[1], "color": color, "score": cache[text]}
                )
                + "\n"
            )
            n += 1
    return n


def _score_encoder(lm: LoadedModel, rows: list[PromptRow], out) -> int:
    bases = base_rows(rows)
    if not bases:
        raise AdapterError("no base prompt rows found")
    cache: dict[str, list[float]] = {}
    n = 0
    for row in sorted(bases, key=lambda r: r.key):
        if row.text not in cache:
            cache[row.text] = [float(s) for s in masked_color_scores(lm, row.text)]
        for color, score in zip(COLORS, cache[row.text]):
            out.write(
                json.dumps(
                    {"object": row.object_id, "template": row.template_id, "color": color, "score": score}
                )
                + "\n"
            )
            n += 1
    return n


def _embed(lm: LoadedModel, rows: list[PromptRow], out) -> int:
    bases = base_rows(rows)
    if not bases:
        raise AdapterError("no base prompt rows found")
    cache: dict[str, list[float]] = {}
    n = 0
    for row in sorted(bases, key=lambda r: r.key):
        text = embedding_text(lm, row.text)
        if text not in cache:
            cache[text] = [float(x) for x in embed_text(lm, text)]
        out.write(
            json.dumps(
                {"object": row.object_id, "template": row.template_id, "vector": cache[text]}
            )
            + "\n"
        )
        n += 1
    return n


def run_job(job: AdapterJob) -> int:
    """Execute the job; returns the number of output lines."""
    rows = load_prompts(job.prompts_path)
    lm = load_model(job.model_id, job.family, random_init=job.random_init, seed=job.seed)
    out_path = Path(job.out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "wt", encoding="utf-8") as out:
        if job.mode == "scores":
            if job.family == "decoder":
                n = _score_decoder(lm, rows, out)
            else:
                n = _score_encoder(lm, rows, out)
            extra = {}
        else:
            n = _embed(lm, rows, out)
            extra = {
                "pooling": "text-projection" if job.family == "clip-text" else "mean-final-layer"
            }
    _write_meta(job, lm, extra)
    return n
