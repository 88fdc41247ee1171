"""chroma-adapter: run a checkpoint over an expanded prompt file.

Examples:
  chroma-adapter --model gpt2 --family decoder --mode scores \
      --prompts prompts.jsonl --out preds.jsonl
  chroma-adapter --model openai/clip-vit-base-patch32 --family clip-text \
      --mode embeddings --prompts prompts.jsonl --out embs.jsonl
"""

from __future__ import annotations

import argparse
import sys

from .prompts import PromptFileError
from .runner import MODES, AdapterJob, run_job
from .scoring import FAMILIES, AdapterError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chroma-adapter",
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--model", required=True, help="checkpoint id or local path")
    parser.add_argument("--family", required=True, choices=FAMILIES)
    parser.add_argument("--mode", required=True, choices=MODES)
    parser.add_argument("--prompts", required=True, help="expanded prompt JSONL")
    parser.add_argument("--out", required=True, help="output JSONL path")
    parser.add_argument("--random-init", action="store_true",
                        help="random weights from the checkpoint's config (baseline runs)")
    parser.add_argument("--seed", type=int, default=0, help="seed for --random-init")
    parser.add_argument("--batch-size", type=int, default=64,
                        help="inference batching; no effect on outputs")
    parser.add_argument("--device", default="cpu", help="accepted for symmetry; cpu only")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        job = AdapterJob(
            model_id=args.model,
            family=args.family,
            mode=args.mode,
            prompts_path=args.prompts,
            out_path=args.out,
            random_init=args.random_init,
            seed=args.seed,
        )
        n = run_job(job)
    except PromptFileError as exc:
        print(f"format error: {exc}", file=sys.stderr)
        return 2
    except AdapterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"{args.mode}: {n} lines -> {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
