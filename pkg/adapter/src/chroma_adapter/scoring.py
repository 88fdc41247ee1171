"""Model loading, sentence scoring, and representation pooling.

Three protocol families:

- decoder (causal LM): score each color-substituted sentence by its total
  token log-probability.
- encoder (masked LM): score each color at the template's slot by masked
  pseudo-log-likelihood; multi-token colors sum their sub-token
  log-probabilities (one sub-token masked at a time) and are flagged in
  the run metadata.
- clip-text: embeddings only, the projected text-tower output.

Embeddings for decoder/encoder models are the mean over final-layer token
states; decoder prompts are truncated at the color slot, encoder prompts
carry the mask token in its place. Identical texts are cached, so repeated
prompts always produce identical outputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch

from .prompts import COLOR_SLOT, COLORS

FAMILIES = ("decoder", "encoder", "clip-text")


class AdapterError(Exception):
    pass


@dataclass
class LoadedModel:
    family: str
    model_id: str
    tokenizer: object
    model: torch.nn.Module
    random_init: bool = False
    multi_token_colors: dict[str, int] = field(default_factory=dict)


def load_model(model_id: str, family: str, random_init: bool = False, seed: int = 0) -> LoadedModel:
    from transformers import (
        AutoConfig,
        AutoModel,
        AutoModelForCausalLM,
        AutoModelForMaskedLM,
        AutoTokenizer,
    )

    if family not in FAMILIES:
        raise AdapterError(f"unknown family {family!r}")
    tokenizer = AutoTokenizer.from_pretrained(model_id)
    if family == "decoder":
        auto = AutoModelForCausalLM
    elif family == "encoder":
        auto = AutoModelForMaskedLM
    else:
        from transformers import CLIPTextModelWithProjection

        auto = CLIPTextModelWithProjection
    if random_init:
        torch.manual_seed(seed)
        config = AutoConfig.from_pretrained(model_id)
        if family == "clip-text":
            text_config = getattr(config, "text_config", config)
            model = auto(text_config)
        elif hasattr(auto, "from_config"):
            model = auto.from_config(config)
        else:
            model = auto(config)
    else:
        model = auto.from_pretrained(model_id)
    model.eval()
    return LoadedModel(
        family=family,
        model_id=model_id,
        tokenizer=tokenizer,
        model=model,
        random_init=random_init,
    )


def _color_token_ids(lm: LoadedModel, color: str) -> list[int]:
    ids = lm.tokenizer(color, add_special_tokens=False)["input_ids"]
    unk = lm.tokenizer.unk_token_id
    if not ids or (unk is not None and unk in ids):
        raise AdapterError(
            f"color {color!r} is not tokenizable by model {lm.model_id!r}"
        )
    return list(ids)


@torch.no_grad()
def sentence_log_prob(lm: LoadedModel, text: str) -> float:
    """Total log-probability of ``text`` under a causal LM. A BOS token, when
    the tokenizer has one, conditions the first word."""
    tok = lm.tokenizer
    ids = tok(text, add_special_tokens=False)["input_ids"]
    if not ids:
        raise AdapterError(f"empty tokenization for {text!r}")
    if tok.bos_token_id is not None:
        ids = [tok.bos_token_id] + list(ids)
        first_scored = 1
    else:
        first_scored = 1  # first token is unconditioned either way
    input_ids = torch.tensor([ids])
    logits = lm.model(input_ids=input_ids).logits[0]
    logp = torch.log_softmax(logits.float(), dim=-1)
    total = 0.0
    for pos in range(first_scored, len(ids)):
        total += float(logp[pos - 1, ids[pos]])
    return total


def _slot_parts(text: str) -> tuple[str, str]:
    if COLOR_SLOT not in text:
        raise AdapterError(f"prompt lacks the color slot {COLOR_SLOT!r}: {text!r}")
    pre, _, post = text.partition(COLOR_SLOT)
    return pre, post


def _color_positions(lm: LoadedModel, text: str, color: str) -> tuple[list[int], list[int]]:
    """Token ids of the slot-filled sentence and the positions covering the
    color, located via character offsets."""
    tok = lm.tokenizer
    pre, post = _slot_parts(text)
    composed = pre + color + post
    try:
        enc = tok(composed, return_offsets_mapping=True)
    except Exception as exc:  # slow tokenizers lack offset mappings
        raise AdapterError(
            f"model {lm.model_id!r} needs a fast tokenizer for encoder scoring"
        ) from exc
    ids = list(enc["input_ids"])
    lo, hi = len(pre), len(pre) + len(color)
    positions = [
        i
        for i, (a, b) in enumerate(enc["offset_mapping"])
        if b > a and a < hi and b > lo
    ]
    if not positions:
        raise AdapterError(f"could not locate color {color!r} in {composed!r}")
    return ids, positions


@torch.no_grad()
def masked_color_scores(lm: LoadedModel, text: str) -> np.ndarray:
    """Scores for all 11 colors at the slot of an encoder prompt.

    For each color the slot is filled with the color's sub-tokens; each
    sub-token in turn is replaced by the mask token and its log-probability
    read off at that position. Single-token colors reduce to classic
    single-mask scoring.
    """
    mask_id = lm.tokenizer.mask_token_id
    if mask_id is None:
        raise AdapterError(f"model {lm.model_id!r} has no mask token")

    scores = np.zeros(len(COLORS))
    all_rows: list[list[int]] = []
    row_meta: list[tuple[int, int]] = []  # (color index, masked-out token id)

    for ci, color in enumerate(COLORS):
        _color_token_ids(lm, color)  # hard error for untokenizable colors
        ids, positions = _color_positions(lm, text, color)
        unk = lm.tokenizer.unk_token_id
        if unk is not None and any(ids[p] == unk for p in positions):
            raise AdapterError(
                f"color {color!r} is not tokenizable by model {lm.model_id!r}"
            )
        if len(positions) > 1:
            lm.multi_token_colors[color] = len(positions)
        for p in positions:
            masked = list(ids)
            masked[p] = mask_id
            all_rows.append(masked)
            row_meta.append((ci, ids[p]))

    logps = _batched_token_logprobs(lm, all_rows, mask_id)
    for (ci, cid), lp in zip(row_meta, logps):
        scores[ci] += lp[cid]
    return scores


@torch.no_grad()
def _batched_token_logprobs(
    lm: LoadedModel, rows: list[list[int]], mask_id: int, batch_size: int = 64
) -> list[np.ndarray]:
    """Log-probability vectors at each row's (single) masked position."""
    pad = lm.tokenizer.pad_token_id
    if pad is None:
        pad = 0
    out: list[np.ndarray] = []
    for start in range(0, len(rows), batch_size):
        chunk = rows[start : start + batch_size]
        width = max(len(r) for r in chunk)
        input_ids = torch.full((len(chunk), width), pad, dtype=torch.long)
        attention = torch.zeros((len(chunk), width), dtype=torch.long)
        positions = []
        for i, r in enumerate(chunk):
            input_ids[i, : len(r)] = torch.tensor(r)
            attention[i, : len(r)] = 1
            positions.append(r.index(mask_id))
        logits = lm.model(input_ids=input_ids, attention_mask=attention).logits
        logp = torch.log_softmax(logits.float(), dim=-1)
        for i, pos in enumerate(positions):
            out.append(logp[i, pos].numpy())
    return out


def embedding_text(lm: LoadedModel, text: str) -> str:
    """What actually gets embedded for a prompt that may carry a color slot:
    decoder prompts are cut at the slot, encoder prompts mask it, slot-free
    prompts pass through."""
    if COLOR_SLOT not in text:
        return text
    pre, post = _slot_parts(text)
    if lm.family == "decoder":
        return pre.rstrip()
    if lm.family == "encoder":
        mask = lm.tokenizer.mask_token
        if mask is None:
            raise AdapterError(f"model {lm.model_id!r} has no mask token")
        return pre + mask + post
    raise AdapterError("clip-text prompts must not contain a color slot")


@torch.no_grad()
def embed_text(lm: LoadedModel, text: str) -> np.ndarray:
    tok = lm.tokenizer
    enc = tok(text, return_tensors="pt")
    if lm.family == "clip-text":
        out = lm.model(input_ids=enc["input_ids"], attention_mask=enc.get("attention_mask"))
        vec = out.text_embeds[0]
    else:
        out = lm.model(
            input_ids=enc["input_ids"],
            attention_mask=enc.get("attention_mask"),
            output_hidden_states=True,
        )
        hidden = out.hidden_states[-1][0]  # (seq, d)
        vec = hidden.mean(dim=0)
    vec = vec.float().numpy()
    if not np.all(np.isfinite(vec)):
        raise AdapterError(f"non-finite embedding for {text!r}")
    return vec
