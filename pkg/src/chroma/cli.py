"""Command-line pipeline driver.

Subcommands cover the full flow: aggregate raw annotations into a dataset,
assign groups and splits, compute corpus statistics, evaluate zero-shot
predictions, probe frozen representations, and summarize corpus files.
Every run writes a manifest (config, input digests, version) next to its
outputs; primary outputs are byte-identical across reruns with the same
inputs and seed.

Exit codes: 0 success, 1 validation failure, 2 input-format failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import annotations, colors, grouping, io, ngrams, probing, templates, zeroshot
from .errors import InputFormatError, ValidationError

ENV_THREADS = "CHROMA_THREADS"


def _default_threads() -> int:
    env = os.environ.get(ENV_THREADS)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _group_stats_rows(report: zeroshot.MetricReport, with_deltas: bool) -> tuple[list[str], list[list]]:
    header = [
        "group",
        "n_objects",
        "spearman_mean",
        "spearman_std",
        "kendall_mean",
        "kendall_std",
        "acc_at_1",
        "d_js_mean",
        "d_js_std",
        "avg_corr_mean",
        "avg_corr_std",
        "n_undefined_corr",
    ]
    if with_deltas:
        header += ["delta_rho", "delta_tau", "n_excluded_delta"]
    rows = []
    for g in report.groups:
        row = [
            g.group,
            g.n_objects,
            g.rho_mean,
            g.rho_std,
            g.tau_mean,
            g.tau_std,
            g.acc_at_1,
            g.d_js_mean,
            g.d_js_std,
            g.avg_corr_mean,
            g.avg_corr_std,
            g.n_undefined_corr,
        ]
        if with_deltas:
            row += [g.delta_rho_mean, g.delta_tau_mean, g.n_excluded_delta]
        rows.append(row)
    return header, rows


# -- subcommands ---------------------------------------------------------------


def cmd_aggregate(args) -> int:
    out = _out_dir(args)
    hits = io.load_hits(args.hits)
    lexicon = io.load_lexicon(args.lexicon)
    records, report = annotations.assemble_dataset(hits, lexicon)
    io.write_dataset(records, out / "dataset.jsonl")
    with open(out / "qc_report.json", "wt", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2)
        fh.write("\n")
    io.write_manifest(out, "aggregate", {"hits": str(args.hits), "lexicon": str(args.lexicon)}, [args.hits, args.lexicon])
    print(
        f"aggregate: {len(records)} objects from {report.n_accepted}/{report.n_hits} hits; "
        f"{len(report.removed_annotations)} annotations removed"
    )
    return 0


def cmd_group(args) -> int:
    out = _out_dir(args)
    records = io.load_dataset(args.dataset)
    profiles = {r.object_id: colors.sorted_profile(r.ground_truth) for r in records}
    model = grouping.label_clusters(grouping.cluster_objects(profiles, args.k, args.seed))
    for r in records:
        r.group = model.group_of(r.object_id)
    io.write_dataset(records, out / "dataset.jsonl")
    config = {"dataset": str(args.dataset), "seed": args.seed, "k": args.k}
    if args.stability_seeds:
        seeds = [int(s) for s in args.stability_seeds.split(",")]
        report = grouping.stability_check(profiles, args.k, seeds)
        with open(out / "stability.json", "wt", encoding="utf-8") as fh:
            json.dump(report.to_dict(), fh, indent=2)
            fh.write("\n")
        config["stability_seeds"] = seeds
    io.write_manifest(out, "group", config, [args.dataset])
    sizes = {g: sum(1 for r in records if r.group == g) for g in annotations.GROUPS}
    print(f"group: sizes {sizes}")
    return 0


def cmd_split(args) -> int:
    out = _out_dir(args)
    records = io.load_dataset(args.dataset)
    assignment = annotations.make_splits(records, args.seed, args.train_frac, args.val_frac)
    for r in records:
        r.split = assignment[r.object_id]
    io.write_dataset(records, out / "dataset.jsonl")
    io.write_manifest(
        out,
        "split",
        {
            "dataset": str(args.dataset),
            "seed": args.seed,
            "train_frac": args.train_frac,
            "val_frac": args.val_frac,
        },
        [args.dataset],
    )
    counts = {s: sum(1 for r in records if r.split == s) for s in annotations.SPLITS}
    print(f"split: sizes {counts}")
    return 0


def cmd_corpus(args) -> int:
    out = _out_dir(args)
    lexicon = io.load_lexicon(args.lexicon)
    keep = ngrams.lexicon_keep_fn(lexicon) if args.restrict else None
    table, ingest_report = ngrams.ingest(args.shards, args.format, keep=keep, threads=args.threads)
    counts = ngrams.attribute_colors(table, lexicon)

    kept, dropped = [], []
    for oid in sorted(counts):
        (kept if counts[oid].phi_o >= args.min_object_count else dropped).append(oid)
    entries = [io.counts_to_entry(counts[oid]) for oid in kept]
    io.write_corpus_file(entries, out / "corpus.jsonl")
    with open(out / "ingest_report.json", "wt", encoding="utf-8") as fh:
        json.dump(ingest_report.to_dict(), fh, indent=2)
        fh.write("\n")

    if entries:
        pct = ngrams.frequency_percentiles([e.phi_o for e in entries])
        io.write_csv(
            out / "percentiles.csv",
            ["name", "n_objects", "p25", "p50", "p75"],
            [[args.name, len(entries), pct["p25"], pct["p50"], pct["p75"]]],
        )
    over = [e.object_id for e in entries if e.freq is not None and e.freq > 100]
    if over:
        print(f"warning: {len(over)} objects with color frequency > 100 (e.g. {over[0]!r})")

    config = {
        "shards": [str(s) for s in args.shards],
        "format": args.format,
        "lexicon": str(args.lexicon),
        "min_object_count": args.min_object_count,
        "name": args.name,
        "restrict": args.restrict,
    }

    if args.dataset:
        records = [r for r in io.load_dataset(args.dataset) if r.object_id in counts]
        dists = {e.object_id: e.dist for e in entries}
        freq_by_obj = {e.object_id: e.freq for e in entries}
        covered = [r for r in records if r.object_id in dists]
        preds = zeroshot.PredictionSet()
        no_data = 0
        eval_records = []
        for r in covered:
            d = dists[r.object_id]
            if d is None:
                no_data += 1
                continue
            # score with log-probabilities so softmax recovers the distribution
            preds.add(r.object_id, "corpus", np.log(np.maximum(d, 1e-300)))
            eval_records.append(r)
        config["dataset"] = str(args.dataset)
        if eval_records:
            report = zeroshot.evaluate(preds, eval_records)
            header, rows = _group_stats_rows(report, with_deltas=False)
            header.insert(2, "freq_mean")
            for row in rows:
                group = row[0]
                in_group = [
                    freq_by_obj[r.object_id]
                    for r in eval_records
                    if (group == "all" or r.group == group) and freq_by_obj[r.object_id] is not None
                ]
                row.insert(2, float(np.mean(in_group)) if in_group else None)
            io.write_csv(out / "group_metrics.csv", header, rows)
        print(
            f"corpus: {len(entries)} objects ({len(dropped)} below min count); "
            f"{no_data} without color data excluded from metrics"
        )
    else:
        print(f"corpus: {len(entries)} objects ({len(dropped)} below min count)")

    manifest_inputs = list(args.shards) + [args.lexicon] + ([args.dataset] if args.dataset else [])
    io.write_manifest(out, "corpus", config, manifest_inputs)
    return 0


def cmd_eval_zeroshot(args) -> int:
    out = _out_dir(args)
    preds = io.load_predictions(args.predictions)
    records = io.load_dataset(args.dataset)
    if args.split:
        records = [r for r in records if r.split == args.split]
    if args.templates:
        ts = templates.load_templates(args.templates)
        known = {t.id for t in ts.templates}
        alien = sorted({t for _, t in preds.entries if t not in known})
        if alien:
            raise ValidationError(f"predictions use unknown template ids: {alien[:5]}")
    corpus_dists = None
    if args.corpus:
        corpus_dists = {e.object_id: e.dist for e in io.load_corpus_file(args.corpus).values()}
    report = zeroshot.evaluate(preds, records, corpus_dists)

    header, rows = _group_stats_rows(report, with_deltas=corpus_dists is not None)
    io.write_csv(out / "zeroshot_report.csv", header, rows)
    scatter_rows = [
        [r.object_id, r.group or "", 100.0 * r.tau_ngram if r.tau_ngram is not None else None,
         100.0 * r.tau if r.tau is not None else None]
        for r in report.rows
    ]
    io.write_csv(out / "scatter.csv", ["object", "group", "tau_ngram", "tau_model"], scatter_rows)

    config = {
        "predictions": str(args.predictions),
        "dataset": str(args.dataset),
        "templates": str(args.templates) if args.templates else None,
        "corpus": str(args.corpus) if args.corpus else None,
        "split": args.split,
    }
    inputs = [args.predictions, args.dataset] + [p for p in (args.templates, args.corpus) if p]
    io.write_manifest(out, "eval-zeroshot", config, inputs)
    if corpus_dists is not None:
        print(f"eval-zeroshot: {len(report.rows)} objects; {report.n_no_ngram} lacked n-gram data")
    else:
        print(f"eval-zeroshot: {len(report.rows)} objects")
    return 0


def _parse_embeddings_args(specs: list[str]) -> dict[str, Path]:
    out = {}
    for spec in specs:
        if "=" in spec:
            name, _, path = spec.partition("=")
        else:
            path = spec
            name = Path(spec).stem
        if name in out:
            raise ValidationError(f"duplicate embeddings model name {name!r}")
        out[name] = Path(path)
    return out


def cmd_probe_repr(args) -> int:
    out = _out_dir(args)
    records = io.load_dataset(args.dataset)
    targets = {r.object_id: r.ground_truth for r in records}
    train_objects = [r.object_id for r in records if r.split == args.train_split]
    eval_objects = [r.object_id for r in records if r.split == args.eval_split]
    if not train_objects or not eval_objects:
        raise ValidationError(
            f"dataset has no objects for splits {args.train_split!r}/{args.eval_split!r}"
        )
    cfg = probing.ProbeConfig(
        hidden_width=args.hidden_width,
        steps=args.steps,
        learning_rate=args.learning_rate,
        batch_size=args.batch_size,
        seeds=tuple(int(s) for s in args.seeds.split(",")),
        epsilon=args.epsilon,
    )
    schedule = probing.subset_schedule(len(train_objects), args.schedule_points)

    baselines = None
    if args.zero_shot_baseline:
        try:
            baselines = json.loads(Path(args.zero_shot_baseline).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise InputFormatError(f"cannot read baseline file: {exc}") from exc

    embedding_paths = _parse_embeddings_args(args.embeddings)
    curves = {}
    for model, path in sorted(embedding_paths.items()):
        embs = io.load_embeddings(path)
        curves[model] = probing.loss_data_curve(
            embs, targets, schedule, cfg, train_objects, eval_objects, threads=args.threads
        )

    table, curve_rows = probing.repr_report(curves, cfg.epsilon, baselines)
    eps_label = io.fmt_float(cfg.epsilon)
    io.write_csv(
        out / "repr_report.csv",
        ["model", "n", "d_js", "mdl", f"sdl_eps_{eps_label}", "sdl_is_lower_bound",
         f"esc_eps_{eps_label}", "esc_exceeds_schedule", "avg_corr"],
        [
            [r.model, r.n, r.d_js, r.mdl, r.sdl.value, r.sdl.is_lower_bound,
             r.esc.value, r.esc.exceeds_schedule, r.avg_corr]
            for r in table
        ],
    )
    curve_header = ["model", "n", "mean_loss", "std_loss", "mean_avg_corr"]
    extra = [k for k in ("zero_shot_avg_corr", "zero_shot_d_js") if any(k in row for row in curve_rows)]
    curve_header += extra
    io.write_csv(
        out / "curve.csv",
        curve_header,
        [[row["model"], row["n"], row["mean_loss"], row["std_loss"], row["mean_avg_corr"]]
         + [row.get(k) for k in extra] for row in curve_rows],
    )

    config = {
        "embeddings": {m: str(p) for m, p in embedding_paths.items()},
        "dataset": str(args.dataset),
        "schedule": list(schedule),
        "seeds": list(cfg.seeds),
        "epsilon": cfg.epsilon,
        "hidden_width": cfg.hidden_width,
        "steps": cfg.steps,
        "learning_rate": cfg.learning_rate,
        "batch_size": cfg.batch_size,
        "train_split": args.train_split,
        "eval_split": args.eval_split,
    }
    inputs = [args.dataset] + [str(p) for p in embedding_paths.values()]
    if args.zero_shot_baseline:
        inputs.append(args.zero_shot_baseline)
        config["zero_shot_baseline"] = str(args.zero_shot_baseline)
    io.write_manifest(out, "probe-repr", config, inputs)
    print(f"probe-repr: {len(curves)} model(s), schedule {list(schedule)}")
    return 0


def cmd_report(args) -> int:
    out = _out_dir(args)
    rows = []
    for path in args.corpus:
        entries = io.load_corpus_file(path)
        pct = ngrams.frequency_percentiles([e.phi_o for e in entries.values()])
        rows.append([Path(path).stem, len(entries), pct["p25"], pct["p50"], pct["p75"]])
    io.write_csv(out / "frequency_table.csv", ["name", "n_objects", "p25", "p50", "p75"], rows)
    io.write_manifest(out, "report", {"corpus": [str(p) for p in args.corpus]}, list(args.corpus))
    print(f"report: {len(rows)} corpora summarized")
    return 0


def cmd_expand(args) -> int:
    out = _out_dir(args)
    records = io.load_dataset(args.dataset)
    ts = templates.load_templates(args.templates) if args.templates else templates.default_templates(args.family)
    prompts = templates.expand(records, ts)
    io.write_prompts(prompts, out / "prompts.jsonl")
    config = {
        "dataset": str(args.dataset),
        "templates": str(args.templates) if args.templates else None,
        "family": ts.family,
    }
    io.write_manifest(out, "expand", config, [args.dataset] + ([args.templates] if args.templates else []))
    print(f"expand: {len(prompts)} prompts ({ts.family} family)")
    return 0


def cmd_validate(args) -> int:
    warnings = io.validate_file(args.kind, args.path)
    for w in warnings:
        print(f"warning: {w}")
    print(f"validate: {args.path} is a valid {args.kind} file ({len(warnings)} warnings)")
    if warnings and args.strict:
        return 1
    return 0


# -- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chroma",
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument(
        "--threads",
        type=int,
        default=_default_threads(),
        help=f"worker threads (env {ENV_THREADS} overrides the default)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("aggregate", help="raw annotation JSONL -> dataset + QC report")
    p.add_argument("--hits", required=True)
    p.add_argument("--lexicon", required=True, help="JSON: object -> [singular, plural]")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_aggregate)

    p = sub.add_parser("group", help="assign single/multi/any groups by clustering")
    p.add_argument("--dataset", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--stability-seeds", default=None, help="comma list; also emit an agreement report")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_group)

    p = sub.add_parser("split", help="stratified train/val/test assignment")
    p.add_argument("--dataset", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--train-frac", type=float, default=annotations.TRAIN_FRAC)
    p.add_argument("--val-frac", type=float, default=annotations.VAL_FRAC)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("corpus", help="n-gram shards -> per-object color statistics")
    p.add_argument("--shards", required=True, nargs="+")
    p.add_argument("--format", required=True, choices=ngrams.FORMATS)
    p.add_argument("--lexicon", required=True)
    p.add_argument("--min-object-count", type=int, default=25)
    p.add_argument("--dataset", default=None, help="also emit group metrics vs ground truth")
    p.add_argument("--name", default="corpus", help="row label for the percentile table")
    p.add_argument("--no-restrict", dest="restrict", action="store_false",
                   help="keep all n-grams instead of only lexicon-relevant ones")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_corpus)

    p = sub.add_parser("eval-zeroshot", help="score prediction files against the dataset")
    p.add_argument("--predictions", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--templates", default=None)
    p.add_argument("--corpus", default=None, help="corpus file enabling the delta columns")
    p.add_argument("--split", default=None, choices=annotations.SPLITS)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_eval_zeroshot)

    p = sub.add_parser("probe-repr", help="loss-data probing of representation files")
    p.add_argument("--embeddings", required=True, nargs="+", help="path or name=path, repeatable")
    p.add_argument("--dataset", required=True)
    p.add_argument("--seeds", default="0,1,2,3,4")
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--hidden-width", type=int, default=512)
    p.add_argument("--steps", type=int, default=4000)
    p.add_argument("--learning-rate", type=float, default=1e-4)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--schedule-points", type=int, default=10)
    p.add_argument("--train-split", default="train", choices=annotations.SPLITS)
    p.add_argument("--eval-split", default="val", choices=annotations.SPLITS)
    p.add_argument("--zero-shot-baseline", default=None,
                   help='JSON: model -> {"avg_corr": x, "d_js": y} reference lines')
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_probe_repr)

    p = sub.add_parser("report", help="percentile summary across corpus files")
    p.add_argument("--corpus", required=True, nargs="+")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("expand", help="instantiate templates over the dataset objects")
    p.add_argument("--dataset", required=True)
    p.add_argument("--templates", default=None, help="template JSON (default: built-in set)")
    p.add_argument("--family", default="encoder", choices=templates.FAMILIES,
                   help="built-in template family when --templates is not given")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_expand)

    p = sub.add_parser("validate", help="check a file against its schema")
    p.add_argument("--kind", required=True, choices=io.VALIDATE_KINDS)
    p.add_argument("--strict", action="store_true", help="treat warnings as failures")
    p.add_argument("path")
    p.set_defaults(func=cmd_validate)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except InputFormatError as exc:
        print(f"format error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
