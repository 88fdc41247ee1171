"""Prompt-file parsing and the shared color vocabulary.

The adapter talks to the main toolkit only through files, so the canonical
11-color order is restated here; it is normative across all chroma file
formats.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

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

COLOR_SLOT = "<C>"


class PromptFileError(Exception):
    pass


@dataclass(frozen=True)
class PromptRow:
    object_id: str
    template_id: str
    text: str
    color: str | None = None

    @property
    def key(self) -> tuple[str, str]:
        return (self.object_id, self.template_id)


def load_prompts(path: str | Path) -> list[PromptRow]:
    rows: list[PromptRow] = []
    p = Path(path)
    try:
        lines = p.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise PromptFileError(f"cannot read prompt file {p}: {exc}") from exc
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise PromptFileError(f"{p}:{lineno}: invalid JSON: {exc}") from exc
        try:
            rows.append(
                PromptRow(
                    object_id=str(obj["object"]),
                    template_id=str(obj["template"]),
                    text=str(obj["text"]),
                    color=obj.get("color"),
                )
            )
        except KeyError as exc:
            raise PromptFileError(f"{p}:{lineno}: missing field {exc}") from exc
    if not rows:
        raise PromptFileError(f"{p}: no prompts")
    return rows


def base_rows(rows: list[PromptRow]) -> list[PromptRow]:
    """One slot-bearing (or slot-free) row per (object, template), in first-
    appearance order."""
    seen = {}
    for r in rows:
        if r.color is None and r.key not in seen:
            seen[r.key] = r
    return list(seen.values())


def color_rows(rows: list[PromptRow]) -> dict[tuple[str, str], dict[str, str]]:
    """(object, template) -> color -> substituted sentence."""
    out: dict[tuple[str, str], dict[str, str]] = {}
    for r in rows:
        if r.color is not None:
            out.setdefault(r.key, {})[r.color] = r.text
    return out
