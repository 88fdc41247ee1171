"""Prompt templates and their expansion over the object lexicon.

Templates carry an ``<OBJ>`` slot for the object surface form and, for the
text-model families, a ``<C>`` slot for the color. The clip family has no
color slot (its prompts describe the object alone). Expansion picks the
singular or plural form per template, fixes a/an agreement, and for the
decoder family also emits one fully substituted sentence per color.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from . import colors
from .errors import InputFormatError, ValidationError

FAMILIES = ("decoder", "encoder", "clip")
NUMBERS = ("singular", "plural")

OBJ_SLOT = "<OBJ>"
COLOR_SLOT = "<C>"

_VOWELS = "aeiou"


@dataclass(frozen=True)
class Template:
    id: str
    text: str
    number: str  # which surface form fills the slot


@dataclass(frozen=True)
class TemplateSet:
    family: str
    templates: tuple[Template, ...]

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValidationError(f"unknown template family {self.family!r}")
        seen = set()
        for t in self.templates:
            if t.id in seen:
                raise ValidationError(f"duplicate template id {t.id!r}")
            seen.add(t.id)
            if t.number not in NUMBERS:
                raise ValidationError(f"template {t.id!r}: bad number {t.number!r}")
            if t.text.count(OBJ_SLOT) != 1:
                raise ValidationError(f"template {t.id!r}: need exactly one {OBJ_SLOT}")
            n_color = t.text.count(COLOR_SLOT)
            if self.family == "clip" and n_color != 0:
                raise ValidationError(f"clip template {t.id!r} must not contain {COLOR_SLOT}")
            if self.family != "clip" and n_color != 1:
                raise ValidationError(f"template {t.id!r}: need exactly one {COLOR_SLOT}")


_TEXT_TEMPLATES = (
    Template("most-are", f"Most {OBJ_SLOT} are {COLOR_SLOT}.", "plural"),
    Template("this-is", f"This {OBJ_SLOT} is {COLOR_SLOT}.", "singular"),
)

# Photo-description prompts; states that would skew the color (dirty,
# broken, ...) are deliberately absent.
_CLIP_TEMPLATES = (
    Template("photo-a", f"a photo of a {OBJ_SLOT}.", "singular"),
    Template("photo-the", f"a photo of the {OBJ_SLOT}.", "singular"),
    Template("photo-one", f"a photo of one {OBJ_SLOT}.", "singular"),
    Template("photo-many", f"a photo of many {OBJ_SLOT}.", "plural"),
    Template("photo-good", f"a good photo of a {OBJ_SLOT}.", "singular"),
    Template("photo-bright", f"a bright photo of a {OBJ_SLOT}.", "singular"),
    Template("photo-close", f"a close-up photo of a {OBJ_SLOT}.", "singular"),
    Template("photo-cropped", f"a cropped photo of a {OBJ_SLOT}.", "singular"),
    Template("photo-large", f"a photo of a large {OBJ_SLOT}.", "singular"),
    Template("photo-small", f"a photo of a small {OBJ_SLOT}.", "singular"),
)


def default_templates(family: str) -> TemplateSet:
    if family == "clip":
        return TemplateSet("clip", _CLIP_TEMPLATES)
    if family in ("decoder", "encoder"):
        return TemplateSet(family, _TEXT_TEMPLATES)
    raise ValidationError(f"unknown template family {family!r}")


def load_templates(path: str | Path) -> TemplateSet:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InputFormatError(f"cannot read template file {path}: {exc}") from exc
    try:
        templates = tuple(
            Template(t["id"], t["text"], t["number"]) for t in data["templates"]
        )
        return TemplateSet(data["family"], templates)
    except (KeyError, TypeError) as exc:
        raise InputFormatError(f"template file {path} missing field: {exc}") from exc


def save_templates(ts: TemplateSet, path: str | Path) -> None:
    data = {
        "family": ts.family,
        "templates": [
            {"id": t.id, "text": t.text, "number": t.number} for t in ts.templates
        ],
    }
    Path(path).write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")


def _fix_article(text: str, form: str) -> str:
    """Adjust a/an immediately before the object slot to match ``form``."""
    article = "an" if form[:1].lower() in _VOWELS else "a"
    for candidate in ("a", "an"):
        for cased in (candidate, candidate.capitalize()):
            needle = f"{cased} {OBJ_SLOT}"
            if needle in text:
                fixed = article.capitalize() if cased[0].isupper() else article
                text = text.replace(needle, f"{fixed} {OBJ_SLOT}")
    return text


@dataclass(frozen=True)
class Prompt:
    object_id: str
    template_id: str
    text: str
    color: str | None = None  # set on decoder color variants only

    def to_dict(self) -> dict:
        d = {"object": self.object_id, "template": self.template_id, "text": self.text}
        if self.color is not None:
            d["color"] = self.color
        return d


def expand(objects, ts: TemplateSet) -> list[Prompt]:
    """Instantiate every template for every object.

    Every (object, template) pair yields one base prompt whose color slot,
    if any, is left in place for the scorer to handle; the decoder family
    additionally yields the 11 full sentences with the color substituted.
    """
    prompts: list[Prompt] = []
    for obj in objects:
        for t in ts.templates:
            form = obj.plural if t.number == "plural" else obj.singular
            if not form:
                raise ValidationError(
                    f"object {obj.object_id!r} lacks a {t.number} surface form"
                )
            text = _fix_article(t.text, form).replace(OBJ_SLOT, form)
            prompts.append(Prompt(obj.object_id, t.id, text))
            if ts.family == "decoder":
                for color in colors.COLORS:
                    prompts.append(
                        Prompt(obj.object_id, t.id, text.replace(COLOR_SLOT, color), color)
                    )
    return prompts
