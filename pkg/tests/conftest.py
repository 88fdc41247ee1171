import json

import numpy as np
import pytest
from hypothesis import strategies as st

from chroma import colors


@st.composite
def rating_vectors(draw):
    vals = [draw(st.integers(min_value=0, max_value=5)) for _ in range(colors.N_COLORS)]
    if not any(vals):
        vals[draw(st.integers(min_value=0, max_value=colors.N_COLORS - 1))] = draw(
            st.integers(min_value=1, max_value=5)
        )
    return tuple(vals)


@st.composite
def raw_weights(draw, min_positive=1):
    vals = draw(
        st.lists(
            st.floats(min_value=0.0, max_value=100.0, allow_nan=False),
            min_size=colors.N_COLORS,
            max_size=colors.N_COLORS,
        )
    )
    positive = draw(
        st.lists(
            st.integers(min_value=0, max_value=colors.N_COLORS - 1),
            min_size=min_positive,
            max_size=colors.N_COLORS,
            unique=True,
        )
    )
    vals = list(vals)
    for i in positive:
        vals[i] = max(vals[i], draw(st.floats(min_value=0.5, max_value=10.0)))
    return np.asarray(vals)


@st.composite
def distributions(draw):
    return colors.normalize(draw(raw_weights()))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# -- synthetic end-to-end pipeline files ------------------------------------
#
# A miniature crowdsourcing study over three invented object families whose
# rating shapes land in the three cluster groups, plus matching corpus text,
# predictions, and embeddings. Shared by the CLI and acceptance suites.

N_PER_FAMILY = 12


def _family_ratings(family, member):
    # deterministic per object so every worker agrees and the QC filter
    # removes nothing; the three shapes land in the three cluster groups
    ratings = [0] * 11
    if family == "mono":
        ratings[member % 11] = 5
        ratings[(member + 1) % 11] = 1
    elif family == "tri":
        for j in range(3):
            ratings[(member + 4 * j) % 11] = 4
    else:  # rainbow
        ratings = [2 + (member + c) % 3 for c in range(11)]
    return tuple(ratings)


def pipeline_object_ids():
    ids = []
    for family in ("mono", "tri", "rainbow"):
        for member in range(N_PER_FAMILY):
            ids.append(f"{family}{member:02d}")
    return ids


def write_pipeline_inputs(tmp, n_workers=4, seed=0):
    """Create hits.jsonl, lexicon.json and corpus.txt under ``tmp``."""
    rng = np.random.default_rng(seed)
    objects = pipeline_object_ids()
    lexicon = {oid: [oid, oid + "s"] for oid in objects}
    lexicon["spinach"] = ["spinach", "spinach"]

    hits = []
    for w in range(n_workers):
        records = [
            {"object": "spinach", "ratings": [0, 0, 1, 5, 0, 0, 0, 0, 0, 0, 0]}
        ]
        for oid in objects:
            family = oid.rstrip("0123456789")
            member = int(oid[len(family):])
            records.append({"object": oid, "ratings": list(_family_ratings(family, member))})
        hits.append({"worker_id": f"w{w}", "control": "spinach", "records": records})

    hits_path = tmp / "hits.jsonl"
    hits_path.write_text("\n".join(json.dumps(h) for h in hits) + "\n", encoding="utf-8")
    lex_path = tmp / "lexicon.json"
    lex_path.write_text(json.dumps(lexicon, indent=1), encoding="utf-8")

    sentences = []
    for oid in objects:
        for _ in range(3):
            color = colors.COLORS[int(rng.integers(0, 11))]
            sentences.append(f"The {color} {oid} was there.")
        sentences.append(f"Some {oid}s appeared.")
    sentences.append("The green spinach wilted.")
    corpus_path = tmp / "corpus.txt"
    corpus_path.write_text("\n".join(sentences) + "\n", encoding="utf-8")
    return hits_path, lex_path, corpus_path


def write_predictions_from_dataset(dataset_path, out_path, noise=0.0, seed=0):
    """Predictions whose softmax reproduces each ground truth (plus noise)."""
    from chroma import io as chroma_io
    from chroma.zeroshot import PredictionSet

    rng = np.random.default_rng(seed)
    records = chroma_io.load_dataset(dataset_path)
    preds = PredictionSet()
    for r in records:
        for t in ("most-are", "this-is"):
            scores = np.log(np.maximum(r.ground_truth, 1e-12))
            if noise:
                scores = scores + noise * rng.standard_normal(11)
            preds.add(r.object_id, t, scores)
    chroma_io.write_predictions(preds, out_path)
    return out_path


def write_embeddings_from_dataset(dataset_path, out_path, dim=8, templates=("t0", "t1"), seed=0):
    """Embeddings linearly tied to each object's ground truth."""
    from chroma import io as chroma_io
    from chroma.probing import EmbeddingSet

    rng = np.random.default_rng(seed)
    records = chroma_io.load_dataset(dataset_path)
    mix = rng.standard_normal((11, dim)) * 0.6
    embs = EmbeddingSet()
    for r in records:
        base = r.ground_truth @ mix
        for t in templates:
            embs.add(r.object_id, t, base)
    chroma_io.write_embeddings(embs, out_path)
    return out_path
