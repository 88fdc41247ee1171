"""Tiny offline checkpoints for adapter tests.

Everything is built locally (word-level or word-piece tokenizers plus
2-layer models from config) so the suite runs without hub access.
"""

import json

import pytest
import torch
from tokenizers import Tokenizer, models, normalizers, pre_tokenizers, processors
from transformers import PreTrainedTokenizerFast

from chroma_adapter.prompts import COLORS

OBJECTS = [f"obj{i}" for i in range(10)]

BASE_WORDS = [
    "most", "this", "is", "are", ".", "a", "photo", "of", "the", "spinach",
]


def tiny_vocab(extra=()):
    words = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]", "[BOS]", "[EOS]"]
    words += BASE_WORDS + list(COLORS) + OBJECTS + [o + "s" for o in OBJECTS]
    words += list(extra)
    return {w: i for i, w in enumerate(words)}


def word_level_tokenizer(tmp_dir, vocab=None, bert_style=False):
    vocab = vocab or tiny_vocab()
    tok = Tokenizer(models.WordLevel(vocab, unk_token="[UNK]"))
    tok.normalizer = normalizers.Lowercase()
    tok.pre_tokenizer = pre_tokenizers.Whitespace()
    if bert_style:
        tok.post_processor = processors.TemplateProcessing(
            single="[CLS] $A [SEP]",
            special_tokens=[("[CLS]", vocab["[CLS]"]), ("[SEP]", vocab["[SEP]"])],
        )
    fast = PreTrainedTokenizerFast(
        tokenizer_object=tok,
        unk_token="[UNK]",
        pad_token="[PAD]",
        mask_token="[MASK]",
        cls_token="[CLS]",
        sep_token="[SEP]",
        bos_token="[BOS]",
        eos_token="[EOS]",
    )
    fast.save_pretrained(tmp_dir)
    return fast


def make_decoder_checkpoint(tmp_dir, seed=0):
    from transformers import GPT2Config, GPT2LMHeadModel

    tok = word_level_tokenizer(tmp_dir)
    torch.manual_seed(seed)
    config = GPT2Config(
        vocab_size=len(tok),
        n_positions=64,
        n_embd=32,
        n_layer=2,
        n_head=2,
        bos_token_id=tok.bos_token_id,
        eos_token_id=tok.eos_token_id,
    )
    GPT2LMHeadModel(config).save_pretrained(tmp_dir)
    return tmp_dir


def make_encoder_checkpoint(tmp_dir, seed=0, vocab=None):
    from transformers import BertConfig, BertForMaskedLM

    tok = word_level_tokenizer(tmp_dir, vocab=vocab, bert_style=True)
    torch.manual_seed(seed)
    config = BertConfig(
        vocab_size=len(tok),
        hidden_size=32,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=64,
        max_position_embeddings=64,
        pad_token_id=tok.pad_token_id,
    )
    BertForMaskedLM(config).save_pretrained(tmp_dir)
    return tmp_dir


def make_wordpiece_encoder_checkpoint(tmp_dir, seed=0):
    """Word-piece tokenizer where 'orange' splits into two pieces and
    'purple' is absent entirely (maps to [UNK])."""
    from transformers import BertConfig, BertForMaskedLM

    words = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
    colors_present = [c for c in COLORS if c not in ("orange", "purple")]
    words += BASE_WORDS + colors_present + OBJECTS + [o + "s" for o in OBJECTS]
    words += ["ora", "##nge"]
    vocab = {w: i for i, w in enumerate(words)}

    tok = Tokenizer(models.WordPiece(vocab, unk_token="[UNK]", max_input_chars_per_word=32))
    tok.normalizer = normalizers.Lowercase()
    tok.pre_tokenizer = pre_tokenizers.Whitespace()
    tok.post_processor = processors.TemplateProcessing(
        single="[CLS] $A [SEP]",
        special_tokens=[("[CLS]", vocab["[CLS]"]), ("[SEP]", vocab["[SEP]"])],
    )
    fast = PreTrainedTokenizerFast(
        tokenizer_object=tok,
        unk_token="[UNK]",
        pad_token="[PAD]",
        mask_token="[MASK]",
        cls_token="[CLS]",
        sep_token="[SEP]",
    )
    fast.save_pretrained(tmp_dir)
    torch.manual_seed(seed)
    config = BertConfig(
        vocab_size=len(fast),
        hidden_size=32,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=64,
        max_position_embeddings=64,
        pad_token_id=fast.pad_token_id,
    )
    BertForMaskedLM(config).save_pretrained(tmp_dir)
    return tmp_dir


def make_clip_text_checkpoint(tmp_dir, seed=0):
    from transformers import CLIPTextConfig, CLIPTextModelWithProjection

    tok = word_level_tokenizer(tmp_dir)
    torch.manual_seed(seed)
    config = CLIPTextConfig(
        vocab_size=len(tok),
        hidden_size=32,
        intermediate_size=64,
        num_hidden_layers=2,
        num_attention_heads=2,
        max_position_embeddings=64,
        projection_dim=16,
        eos_token_id=tok.eos_token_id,
        bos_token_id=tok.bos_token_id,
        pad_token_id=tok.pad_token_id,
    )
    CLIPTextModelWithProjection(config).save_pretrained(tmp_dir)
    return tmp_dir


def write_prompts(path, rows):
    with open(path, "wt", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")
    return path


def encoder_prompt_rows(objects=OBJECTS):
    rows = []
    for oid in objects:
        rows.append({"object": oid, "template": "most-are", "text": f"Most {oid}s are <C>."})
        rows.append({"object": oid, "template": "this-is", "text": f"This {oid} is <C>."})
    return rows


def decoder_prompt_rows(objects=OBJECTS):
    rows = []
    for oid in objects:
        base = f"Most {oid}s are <C>."
        rows.append({"object": oid, "template": "most-are", "text": base})
        for color in COLORS:
            rows.append(
                {
                    "object": oid,
                    "template": "most-are",
                    "text": base.replace("<C>", color),
                    "color": color,
                }
            )
    return rows


def clip_prompt_rows(objects=OBJECTS):
    return [
        {"object": oid, "template": "photo-a", "text": f"A photo of a {oid}."}
        for oid in objects
    ]


@pytest.fixture(scope="session")
def decoder_dir(tmp_path_factory):
    return make_decoder_checkpoint(tmp_path_factory.mktemp("gpt-tiny"))


@pytest.fixture(scope="session")
def encoder_dir(tmp_path_factory):
    return make_encoder_checkpoint(tmp_path_factory.mktemp("bert-tiny"))


@pytest.fixture(scope="session")
def wordpiece_dir(tmp_path_factory):
    return make_wordpiece_encoder_checkpoint(tmp_path_factory.mktemp("bert-wp"))


@pytest.fixture(scope="session")
def clip_dir(tmp_path_factory):
    return make_clip_text_checkpoint(tmp_path_factory.mktemp("clip-tiny"))
