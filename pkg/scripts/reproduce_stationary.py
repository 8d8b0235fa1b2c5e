"""Train the stationary benchmark for a few seeds and print the error summary.

    python scripts/reproduce_stationary.py --seeds 0 1 2 --out-dir runs
"""

import argparse

from burgers_pinn import config as cfgmod
from burgers_pinn.experiments import run_reproduce


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    ap.add_argument("--out-dir", default="runs")
    args = ap.parse_args()
    for seed in args.seeds:
        cfg = cfgmod.RunConfig(seed=seed, out_dir=args.out_dir)
        res = run_reproduce(cfg)
        rar = res.outcome.rar
        print(f"seed {seed}: h1_error={res.report.h1_error:.4e} "
              f"residual={res.report.residual_l2:.4e} rar_rounds={rar.rounds_used} "
              f"mean_residual={rar.final_mean_residual:.3e}")


if __name__ == "__main__":
    main()
