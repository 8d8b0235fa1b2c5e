"""Train the periodic time-dependent benchmark and print per-time errors.

    python scripts/reproduce_nonstationary.py --seed 0
"""

import argparse

from burgers_pinn import config as cfgmod
from burgers_pinn.experiments import run_reproduce


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out-dir", default="runs")
    args = ap.parse_args()
    cfg = cfgmod.RunConfig(seed=args.seed, out_dir=args.out_dir)
    cfg = cfgmod.set_value(cfg, "problem.name", "nonstationary")
    res = run_reproduce(cfg)
    for row in res.report.rows:
        print(f"t={row.t:g}: h1_error={row.h1_error:.4e} residual={row.residual:.4e} "
              f"ratio={max(row.h1_error, row.residual) / min(row.h1_error, row.residual):.2f}")


if __name__ == "__main__":
    main()
