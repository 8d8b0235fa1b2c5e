"""Distance between networks trained on base and perturbed data.

    python scripts/stability_study.py --deltas 0.01 0.03 0.1 --perturbation forcing
"""

import argparse

from burgers_pinn import config as cfgmod
from burgers_pinn.experiments import PERTURBATIONS, run_stability_study


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--deltas", type=float, nargs="+", default=[1e-2, 3e-2, 1e-1])
    ap.add_argument("--perturbation", choices=PERTURBATIONS, default="forcing")
    ap.add_argument("--parallel", action="store_true")
    args = ap.parse_args()
    cfg = cfgmod.RunConfig(seed=args.seed)
    cfg = cfgmod.set_value(cfg, "problem.name", "nonstationary")
    study = run_stability_study(cfg, args.deltas, args.perturbation, parallel=args.parallel)
    for r in study.rows:
        print(f"delta={r.delta:<6g} sup_t L2 distance={r.sup_l2_distance:.4e} "
              f"integrated H1 distance={r.integrated_h1_distance:.4e}")
    print(f"fitted C (largest delta) = {study.fitted_c:.4f}")


if __name__ == "__main__":
    main()
