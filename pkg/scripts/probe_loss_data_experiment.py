#!/usr/bin/env python3
"""Loss-data probing on the linearly recoverable synthetic task.

Trains probes over the logarithmic subset schedule (default 1..311,
matching the real dataset's training-split size) and prints the loss-data
curve plus the description-length measures. Useful for calibrating probe
hyperparameters before running on real embedding dumps.
"""

import argparse
import time

from chroma.probing import ProbeConfig, esc, loss_data_curve, mdl, sdl, subset_schedule
from chroma.synthetic import linear_probe_task


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--train-objects", type=int, default=311)
    parser.add_argument("--eval-objects", type=int, default=103)
    parser.add_argument("--dim", type=int, default=16)
    parser.add_argument("--templates", type=int, default=2)
    parser.add_argument("--hidden-width", type=int, default=128)
    parser.add_argument("--steps", type=int, default=2000)
    parser.add_argument("--learning-rate", type=float, default=3e-4)
    parser.add_argument("--seeds", default="0,1,2,3,4")
    parser.add_argument("--epsilon", type=float, default=0.1)
    parser.add_argument("--threads", type=int, default=2)
    parser.add_argument("--task-seed", type=int, default=0)
    args = parser.parse_args()

    task = linear_probe_task(
        n_train=args.train_objects,
        n_eval=args.eval_objects,
        n_templates=args.templates,
        dim=args.dim,
        seed=args.task_seed,
    )
    cfg = ProbeConfig(
        hidden_width=args.hidden_width,
        steps=args.steps,
        learning_rate=args.learning_rate,
        seeds=tuple(int(s) for s in args.seeds.split(",")),
        epsilon=args.epsilon,
    )
    schedule = subset_schedule(args.train_objects, 10)
    print(f"schedule: {list(schedule)}; seeds: {list(cfg.seeds)}")

    start = time.perf_counter()
    curve = loss_data_curve(
        task.embeddings, task.targets, schedule, cfg,
        task.train_objects, task.eval_objects, threads=args.threads,
    )
    elapsed = time.perf_counter() - start

    print(f"\nprior loss (uniform predictor): {curve.prior_loss:.4f}")
    print(f"{'n':>5}  {'mean JS':>8}  {'std':>7}")
    mean = curve.mean_losses()
    for i, n in enumerate(curve.sizes):
        print(f"{n:>5}  {mean[i]:>8.4f}  {curve.losses[:, i].std():>7.4f}")
    print(f"\nMDL          {mdl(curve):.2f}")
    print(f"SDL(eps={cfg.epsilon}) {sdl(curve, cfg.epsilon)}")
    print(f"eSC(eps={cfg.epsilon}) {esc(curve, cfg.epsilon)}")
    print(f"\ntotal time {elapsed:.0f}s")


if __name__ == "__main__":
    main()
