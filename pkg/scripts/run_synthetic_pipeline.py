#!/usr/bin/env python3
"""End-to-end demo on synthetic data.

Builds a miniature annotation study (three object families whose rating
shapes land in the three color groups), then drives every CLI stage:
aggregate -> group -> split -> corpus -> expand -> eval-zeroshot ->
probe-repr -> report. Outputs land under --out (default ./demo_out).
"""

import argparse
import json
from pathlib import Path

import numpy as np

from chroma import cli, colors, io
from chroma.probing import EmbeddingSet
from chroma.zeroshot import PredictionSet

FAMILIES = ("mono", "tri", "rainbow")
PER_FAMILY = 12


def family_ratings(family: str, member: int) -> list[int]:
    ratings = [0] * 11
    if family == "mono":
        ratings[member % 11] = 5
        ratings[(member + 1) % 11] = 1
    elif family == "tri":
        for j in range(3):
            ratings[(member + 4 * j) % 11] = 4
    else:
        ratings = [2 + (member + c) % 3 for c in range(11)]
    return ratings


def build_inputs(root: Path, n_workers: int, seed: int) -> None:
    rng = np.random.default_rng(seed)
    objects = [f"{fam}{m:02d}" for fam in FAMILIES for m in range(PER_FAMILY)]
    lexicon = {oid: [oid, oid + "s"] for oid in objects}
    lexicon["spinach"] = ["spinach", "spinach"]
    (root / "lexicon.json").write_text(json.dumps(lexicon, indent=1), encoding="utf-8")

    hits = []
    for w in range(n_workers):
        records = [{"object": "spinach", "ratings": [0, 0, 1, 5, 0, 0, 0, 0, 0, 0, 0]}]
        for oid in objects:
            fam = oid.rstrip("0123456789")
            records.append({"object": oid, "ratings": family_ratings(fam, int(oid[len(fam):]))})
        hits.append({"worker_id": f"w{w}", "control": "spinach", "records": records})
    with open(root / "hits.jsonl", "wt", encoding="utf-8") as fh:
        for h in hits:
            fh.write(json.dumps(h) + "\n")

    sentences = []
    for oid in objects:
        for _ in range(4):
            color = colors.COLORS[int(rng.integers(0, 11))]
            sentences.append(f"The {color} {oid} was mentioned.")
        sentences.append(f"Many {oid}s appeared in the text.")
    sentences.append("The green spinach wilted.")
    (root / "corpus.txt").write_text("\n".join(sentences) + "\n", encoding="utf-8")


def build_model_outputs(dataset: Path, root: Path, seed: int) -> tuple[Path, Path]:
    """Fake model artifacts: noisy log-probability scores and embeddings
    linearly tied to the ground truth."""
    rng = np.random.default_rng(seed)
    records = io.load_dataset(dataset)

    preds = PredictionSet()
    for r in records:
        for t in ("most-are", "this-is"):
            scores = np.log(np.maximum(r.ground_truth, 1e-12)) + 0.4 * rng.standard_normal(11)
            preds.add(r.object_id, t, scores)
    preds_path = root / "predictions.jsonl"
    io.write_predictions(preds, preds_path)

    mix = rng.standard_normal((11, 12)) * 0.6
    embs = EmbeddingSet()
    for r in records:
        base = r.ground_truth @ mix
        for t in ("t0", "t1"):
            embs.add(r.object_id, t, base + 0.01 * rng.standard_normal(12))
    embs_path = root / "embeddings.jsonl"
    io.write_embeddings(embs, embs_path)
    return preds_path, embs_path


def run(*argv) -> None:
    argv = [str(a) for a in argv]
    print(f"$ chroma {' '.join(argv)}")
    code = cli.main(argv)
    if code != 0:
        raise SystemExit(code)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="demo_out")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--workers", type=int, default=4)
    args = parser.parse_args()

    root = Path(args.out)
    root.mkdir(parents=True, exist_ok=True)
    build_inputs(root, args.workers, args.seed)

    run("aggregate", "--hits", root / "hits.jsonl", "--lexicon", root / "lexicon.json",
        "--out-dir", root / "01-aggregate")
    dataset = root / "01-aggregate" / "dataset.jsonl"

    run("group", "--dataset", dataset, "--seed", args.seed,
        "--stability-seeds", "0,1,2,3,4", "--out-dir", root / "02-group")
    dataset = root / "02-group" / "dataset.jsonl"

    run("split", "--dataset", dataset, "--seed", args.seed, "--out-dir", root / "03-split")
    dataset = root / "03-split" / "dataset.jsonl"

    run("corpus", "--shards", root / "corpus.txt", "--format", "raw_text",
        "--lexicon", root / "lexicon.json", "--min-object-count", 1,
        "--dataset", dataset, "--out-dir", root / "04-corpus")

    run("expand", "--dataset", dataset, "--family", "encoder", "--out-dir", root / "05-prompts")

    preds, embs = build_model_outputs(dataset, root, args.seed)
    run("eval-zeroshot", "--predictions", preds, "--dataset", dataset,
        "--corpus", root / "04-corpus" / "corpus.jsonl", "--out-dir", root / "06-zeroshot")

    run("probe-repr", "--embeddings", f"demo={embs}", "--dataset", dataset,
        "--seeds", "0,1,2", "--steps", 800, "--hidden-width", 64,
        "--learning-rate", "1e-3", "--schedule-points", 5, "--out-dir", root / "07-repr")

    run("report", "--corpus", root / "04-corpus" / "corpus.jsonl", "--out-dir", root / "08-report")
    print(f"\nall stages complete under {root}/")


if __name__ == "__main__":
    main()
