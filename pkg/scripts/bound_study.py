"""Errors of one training run sampled at decreasing loss levels.

    python scripts/bound_study.py --checkpoints 1 1e-1 1e-2 1e-3 1e-4
"""

import argparse

from burgers_pinn import config as cfgmod
from burgers_pinn.experiments import run_bound_study


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--problem", default="stationary")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--checkpoints", type=float, nargs="+", default=[1.0, 1e-1, 1e-2, 1e-3, 1e-4])
    args = ap.parse_args()
    cfg = cfgmod.RunConfig(seed=args.seed)
    cfg = cfgmod.set_value(cfg, "problem.name", args.problem)
    study = run_bound_study(cfg, args.checkpoints)
    print("checkpoint  loss        l2_error    h1_error")
    for r in study.rows:
        if r.reached:
            print(f"{r.checkpoint:<10.1e}  {r.total_loss:.3e}  {r.l2_error:.3e}  {r.h1_error:.3e}")
        else:
            print(f"{r.checkpoint:<10.1e}  unreached")
    print(f"log-log slope of h1_error vs sqrt(loss): {study.slope:.3f}")
    print(f"Spearman rank correlation: {study.spearman:.3f}")


if __name__ == "__main__":
    main()
