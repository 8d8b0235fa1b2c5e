"""Command line entry point: ``python -m burgers_pinn <subcommand> ...``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import config as cfgmod
from . import experiments as ex
from .errors import PinnError
from .io import load_checkpoint, write_csv


def _base_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="config file with 'section.key = value' lines")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one config key (JSON value); repeatable")
    common.add_argument("--seed", type=int)
    common.add_argument("--out-dir")
    common.add_argument("--problem", choices=["stationary", "nonstationary"])
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="burgers-pinn")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("reproduce", parents=[common], help="train and evaluate one benchmark")

    b = sub.add_parser("bound-study", parents=[common], help="errors at decreasing loss checkpoints")
    b.add_argument("--checkpoints", type=float, nargs="+",
                   default=[1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 3e-4, 1e-4])

    s = sub.add_parser("stability-study", parents=[common], help="distance under data perturbations")
    s.add_argument("--deltas", type=float, nargs="+", default=[1e-2, 3e-2, 1e-1])
    s.add_argument("--perturbation", choices=list(ex.PERTURBATIONS), default="forcing")
    s.add_argument("--slices", type=int, default=11)
    s.add_argument("--parallel-studies", action="store_true")

    v = sub.add_parser("verify-forcing", parents=[common], help="residual of the exact solution")
    v.add_argument("--points", type=int, default=10_000)

    e = sub.add_parser("eval", parents=[common], help="evaluate a saved checkpoint")
    e.add_argument("checkpoint")
    return p


def build_config(args) -> cfgmod.RunConfig:
    cfg = cfgmod.load(args.config) if args.config else cfgmod.RunConfig()
    for item in args.set:
        cfg = cfgmod.set_value(cfg, *cfgmod.parse_assignment(item))
    if args.problem is not None:
        cfg = cfgmod.set_value(cfg, "problem.name", args.problem)
    if args.seed is not None:
        cfg = cfgmod.set_value(cfg, "seed", args.seed)
    if args.out_dir is not None:
        cfg = cfgmod.set_value(cfg, "out_dir", args.out_dir)
    return cfg


def _print_report(report):
    if report.rows:
        for r in report.rows:
            print(f"t={r.t:g} h1_error={r.h1_error:.6e} residual={r.residual:.6e}")
    else:
        print(f"h1_error={report.h1_error:.6e} residual={report.residual_l2:.6e}")


def _study_dir(cfg, name: str) -> Path:
    d = Path(cfg.out_dir) / f"{cfg.problem.name}-{cfg.seed}"
    d.mkdir(parents=True, exist_ok=True)
    return d / name


def cmd_reproduce(args, cfg):
    res = ex.run_reproduce(cfg)
    _print_report(res.report)
    if res.outcome.rar is not None:
        rar = res.outcome.rar
        print(f"rar rounds={rar.rounds_used} mean_residual={rar.final_mean_residual:.6e}")
    print(f"wrote {res.out_dir}")


def cmd_bound(args, cfg):
    study = ex.run_bound_study(cfg, args.checkpoints)
    rows = [(r.checkpoint, int(r.reached), r.phase or "-", r.iteration, r.total_loss,
             r.l2_error, r.h1_error) for r in study.rows]
    path = _study_dir(cfg, "bound_study.csv")
    write_csv(path, ["checkpoint", "reached", "phase", "iteration", "total_loss", "l2_error",
                     "h1_error"], rows)
    for r in study.rows:
        state = f"loss={r.total_loss:.3e} h1_error={r.h1_error:.3e}" if r.reached else "unreached"
        print(f"checkpoint {r.checkpoint:.1e}: {state}")
    print(f"slope={study.slope:.4f} spearman={study.spearman:.4f}")
    print(f"wrote {path}")


def cmd_stability(args, cfg):
    study = ex.run_stability_study(cfg, args.deltas, args.perturbation, args.slices,
                                   parallel=args.parallel_studies)
    path = _study_dir(cfg, f"stability_{args.perturbation}.csv")
    write_csv(path, ["delta", "sup_l2_distance", "integrated_h1_distance", "initial_l2_distance"],
              [(r.delta, r.sup_l2_distance, r.integrated_h1_distance, r.initial_l2_distance)
               for r in study.rows])
    for r in study.rows:
        print(f"delta={r.delta:g} sup_l2={r.sup_l2_distance:.4e} "
              f"int_h1={r.integrated_h1_distance:.4e}")
    print(f"fitted C={study.fitted_c:.4f}")
    print(f"wrote {path}")


def cmd_verify(args, cfg):
    chk = ex.run_verify_forcing(cfg.problem.name, args.points, cfg.seed)
    print(f"max |residual of exact| = {chk.max_residual:.3e}")
    for row in chk.samples:
        *x, man, stated = row
        pt = ", ".join(f"{v:g}" for v in x)
        print(f"f({pt}): manufactured={man:.6f} stated={stated:.6f}")


def cmd_eval(args, cfg):
    params = load_checkpoint(args.checkpoint)
    _print_report(ex.run_eval(cfg, params))


COMMANDS = {"reproduce": cmd_reproduce, "bound-study": cmd_bound,
            "stability-study": cmd_stability, "verify-forcing": cmd_verify, "eval": cmd_eval}


def main(argv=None) -> int:
    args = _base_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = build_config(args)
        COMMANDS[args.command](args, cfg)
    except PinnError as err:
        print(f"error[{err.tag}]: {err}", flush=True)
        return 2
    except OSError as err:
        print(f"error[io]: {err}", flush=True)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
