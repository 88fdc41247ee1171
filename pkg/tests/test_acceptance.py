"""Acceptance suite: one test per gating criterion, each printing a
PASS/FAIL line. Run with ``pytest tests/test_acceptance.py -v -s``.
"""

import os
import time
from pathlib import Path

import numpy as np
import pytest

from chroma import cli, colors, io
from chroma.annotations import AnnotationRecord, HitSubmission, aggregate_object, validate_hit
from chroma.grouping import adjusted_rand_index, cluster_objects
from chroma.ngrams import attribute_colors, color_distribution, color_freq, ingest, tokenize_text
from chroma.probing import LossDataCurve, ProbeConfig, loss_data_curve, mdl, sdl, subset_schedule
from chroma.ranks import kendall, spearman
from chroma.synthetic import linear_probe_task, three_family_profiles
from conftest import (
    write_embeddings_from_dataset,
    write_pipeline_inputs,
    write_predictions_from_dataset,
)
from test_ngrams import FIFTY_SENTENCES
from test_ranks import oracle_kendall, oracle_spearman

THREADS = os.cpu_count() or 1


def report(name):
    print(f"\n[PASS] {name}")


def test_metric_oracles_bulk():
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    for i in range(1000):
        if i % 3 == 0:
            x = rng.integers(0, 4, size=11).astype(float)  # heavy ties
            y = rng.integers(0, 4, size=11).astype(float)
        else:
            x = rng.random(11)
            y = rng.random(11)
        ks, ko = kendall(x, y), oracle_kendall(list(x), list(y))
        ss, so = spearman(x, y), oracle_spearman(list(x), list(y))
        if ko is None:
            assert ks is None
        else:
            assert abs(ks - ko) <= 1e-12
        if so is None:
            assert ss is None
        else:
            assert abs(ss - so) <= 1e-12
    elapsed = time.perf_counter() - start
    assert elapsed < 5.0, f"oracle comparison took {elapsed:.2f}s"
    report(f"metric oracles: 1000 pairs within 1e-12 in {elapsed:.2f}s")


def test_corpus_statistics_exactness(tmp_path):
    shard = tmp_path / "corpus.txt"
    shard.write_text("\n".join(FIFTY_SENTENCES) + "\n", encoding="utf-8")
    table, _ = ingest([shard], "raw_text")

    lexicon = {
        "banana": ("banana", "bananas"),
        "apple": ("apple", "apples"),
        "wine": ("wine", "wines"),
        "stop sign": ("stop sign", "stop signs"),
        "dog": ("dog", "dogs"),
        "unseen": ("unseen", "unseens"),
    }
    counts = attribute_colors(table, lexicon)

    # independent naive recount, straight from the sentence list
    def naive_count(tokens):
        hits = 0
        for sentence in FIFTY_SENTENCES:
            for sent_tokens in tokenize_text(sentence):
                for i in range(len(sent_tokens) - len(tokens) + 1):
                    if tuple(sent_tokens[i : i + len(tokens)]) == tokens:
                        hits += 1
        return hits

    for oid, (singular, plural) in lexicon.items():
        forms = {tuple(singular.split()), tuple(plural.split())}
        phi_o = sum(naive_count(f) for f in forms)
        assert counts[oid].phi_o == phi_o  # bit-exact integer equality
        for ci, color in enumerate(colors.COLORS):
            expected = sum(naive_count((color,) + f) for f in forms)
            assert counts[oid].phi_co[ci] == expected

        c = counts[oid]
        freq = color_freq(c)
        dist = color_distribution(c)
        total = sum(
            sum(naive_count((color,) + f) for f in forms) for color in colors.COLORS
        )
        if phi_o == 0:
            assert freq is None
        else:
            assert freq == 100.0 / phi_o * total  # same floats, exact
        if total == 0:
            assert dist is None
        else:
            for ci, color in enumerate(colors.COLORS):
                expected_p = sum(naive_count((color,) + f) for f in forms) / total
                assert dist[ci] == expected_p
    report("corpus statistics: phi, Freq and P(c|o) equal the naive recount bit-exact")


def test_schedule_reproduction():
    schedule = subset_schedule(311, 10)
    assert schedule == (1, 2, 4, 7, 13, 25, 46, 87, 165, 311)
    assert schedule[4] == 13 and schedule[8] == 165
    report(f"subset schedule: {list(schedule)}")


def test_mdl_sdl_identity():
    sizes = (1, 2, 4, 7, 13, 25, 46, 87, 165, 311)

    def flat(total, sizes):
        c = total / sizes[-1]
        return LossDataCurve(
            sizes=sizes, losses=np.full((1, len(sizes)), c), prior_loss=c
        )

    curve = flat(45.07, sizes)
    assert abs(mdl(curve) - 45.07) <= 1e-9
    value = sdl(curve, 0.1)
    assert value.is_lower_bound
    assert abs(value.value - (mdl(curve) - 0.1 * 311)) <= 1e-9
    assert abs(value.value - 13.97) <= 1e-9

    curve13 = flat(2.80, sizes[:5])
    assert abs(mdl(curve13) - 2.80) <= 1e-9
    v13 = sdl(curve13, 0.1)
    assert v13.is_lower_bound
    assert abs(v13.value - 1.50) <= 1e-9

    # identity holds for arbitrary above-threshold curves, not just flat ones
    rng = np.random.default_rng(0)
    for _ in range(50):
        losses = rng.uniform(0.11, 1.0, size=(1, len(sizes)))
        prior = float(rng.uniform(0.11, 1.5))
        c = LossDataCurve(sizes=sizes, losses=losses, prior_loss=prior)
        assert abs(sdl(c, 0.1).value - (mdl(c) - 0.1 * 311)) <= 1e-9
    report("description-length identity: sdl = mdl - eps*n_max (45.07 -> 13.97, 2.80 -> 1.50)")


def test_clustering_recovery():
    profiles, truth = three_family_profiles(per_family=20, seed=0)
    ids = sorted(profiles)
    for seed in range(5):
        model = cluster_objects(profiles, k=3, seed=seed)
        ari = adjusted_rand_index(
            [model.assignments[i] for i in ids], [truth[i] for i in ids]
        )
        assert ari == 1.0, f"seed {seed}: ARI {ari}"
    report("clustering: 3-family fixture recovered with ARI = 1 across 5 seeds")


PUBLISHED_GT = Path(__file__).parent / "data" / "published_ground_truth.jsonl"


@pytest.mark.skipif(not PUBLISHED_GT.exists(), reason="published ground-truth file not bundled")
def test_clustering_published_group_sizes():
    records = io.load_dataset(PUBLISHED_GT)
    profiles = {r.object_id: colors.sorted_profile(r.ground_truth) for r in records}
    model = cluster_objects(profiles, k=3, seed=0)
    sizes = sorted(
        sum(1 for c in model.assignments.values() if c == k) for k in range(3)
    )
    assert sizes == [115, 198, 208]
    report("clustering: published distributions give group sizes 198/208/115")


def test_end_to_end_probing_synthetic():
    start = time.perf_counter()
    task = linear_probe_task(n_train=311, n_eval=103, n_templates=2, dim=16, seed=0)
    cfg = ProbeConfig(hidden_width=128, steps=2000, learning_rate=3e-4)
    schedule = subset_schedule(311, 10)
    curve = loss_data_curve(
        task.embeddings,
        task.targets,
        schedule,
        cfg,
        task.train_objects,
        task.eval_objects,
        threads=THREADS,
    )
    elapsed = time.perf_counter() - start
    mean = curve.mean_losses()
    assert mean[-1] < 0.05, f"final held-out JS {mean[-1]:.4f}"
    for a, b in zip(mean, mean[1:]):
        assert b <= a + 0.01, f"curve increased beyond tolerance: {mean}"
    assert elapsed < 600.0, f"probing run took {elapsed:.0f}s"
    report(
        f"end-to-end probing: final JS {mean[-1]:.4f} < 0.05, "
        f"curve non-increasing (tol 0.01), {elapsed:.0f}s"
    )


def test_qc_pipeline():
    def gate(green_share_ratings):
        rec = AnnotationRecord("w", "spinach", green_share_ratings)
        return validate_hit(HitSubmission("w", (rec,))).accepted

    # share 0.5 exactly: rejected; share just above: accepted
    assert not gate((1, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0))
    assert gate((0, 0, 1, 2, 0, 0, 0, 0, 0, 0, 0))
    assert not gate((0, 0, 2, 1, 0, 0, 0, 0, 0, 0, 0))

    base = (5, 4, 4, 3, 3, 2, 2, 2, 1, 1, 1)
    sane2 = (5, 5, 4, 3, 3, 2, 2, 1, 1, 1, 1)
    adversarial = tuple(reversed(base))
    anns = [
        AnnotationRecord("w1", "o", base),
        AnnotationRecord("w2", "o", sane2),
        AnnotationRecord("w3", "o", adversarial),
    ]
    result = aggregate_object(anns)
    assert [r.record.worker_id for r in result.removed] == ["w3"]
    assert {a.worker_id for a in result.retained} == {"w1", "w2"}
    report("qc pipeline: strict spinach gate and exact adversary removal")


def test_cli_determinism(tmp_path):
    write_pipeline_inputs(tmp_path)

    def run(*argv):
        assert cli.main([str(a) for a in argv]) == 0

    def outputs(out_dir):
        return sorted(p for p in Path(out_dir).iterdir() if p.name != "manifest.json")

    plans = {}
    plans["aggregate"] = lambda out: (
        "aggregate", "--hits", tmp_path / "hits.jsonl",
        "--lexicon", tmp_path / "lexicon.json", "--out-dir", out)
    run(*plans["aggregate"](tmp_path / "agg"))
    dataset = tmp_path / "agg" / "dataset.jsonl"

    plans["group"] = lambda out: (
        "group", "--dataset", dataset, "--seed", 3,
        "--stability-seeds", "0,1", "--out-dir", out)
    run(*plans["group"](tmp_path / "grp"))
    grouped = tmp_path / "grp" / "dataset.jsonl"

    plans["split"] = lambda out: (
        "split", "--dataset", grouped, "--seed", 5, "--out-dir", out)
    run(*plans["split"](tmp_path / "spl"))
    split_ds = tmp_path / "spl" / "dataset.jsonl"

    plans["corpus"] = lambda out: (
        "corpus", "--shards", tmp_path / "corpus.txt", "--format", "raw_text",
        "--lexicon", tmp_path / "lexicon.json", "--min-object-count", 1,
        "--dataset", grouped, "--out-dir", out)
    run(*plans["corpus"](tmp_path / "corp"))

    preds = write_predictions_from_dataset(split_ds, tmp_path / "preds.jsonl", noise=0.3)
    plans["eval-zeroshot"] = lambda out: (
        "eval-zeroshot", "--predictions", preds, "--dataset", split_ds,
        "--corpus", tmp_path / "corp" / "corpus.jsonl", "--out-dir", out)

    embs = write_embeddings_from_dataset(split_ds, tmp_path / "embs.jsonl")
    plans["probe-repr"] = lambda out: (
        "probe-repr", "--embeddings", embs, "--dataset", split_ds,
        "--seeds", "0,1", "--steps", 120, "--hidden-width", 16,
        "--schedule-points", 3, "--out-dir", out)

    plans["report"] = lambda out: (
        "report", "--corpus", tmp_path / "corp" / "corpus.jsonl", "--out-dir", out)

    plans["expand"] = lambda out: (
        "expand", "--dataset", grouped, "--family", "decoder", "--out-dir", out)

    for name, plan in plans.items():
        out_a = tmp_path / f"det-{name}-a"
        out_b = tmp_path / f"det-{name}-b"
        run(*plan(out_a))
        run(*plan(out_b))
        files_a, files_b = outputs(out_a), outputs(out_b)
        assert [p.name for p in files_a] == [p.name for p in files_b], name
        assert files_a, f"{name} wrote no outputs"
        for pa, pb in zip(files_a, files_b):
            assert pa.read_bytes() == pb.read_bytes(), f"{name}: {pa.name} differs"
    report(f"determinism: byte-identical reruns for {', '.join(plans)}")
