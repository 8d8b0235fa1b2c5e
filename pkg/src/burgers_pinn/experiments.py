"""Experiment runners behind the command line: reproduction, bound and stability studies."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.integrate import trapezoid
from scipy.stats import spearmanr

from . import config as cfgmod
from .config import RunConfig
from .errors import InvalidInputError, UnsupportedProblemError
from .io import save_checkpoint, write_csv
from .metrics import ErrorReport, error_report, midpoint_grid, network_distance
from .net import MlpParams, init_network
from .optim import TraceRow, TrainSchedule, train_pipeline
from .pde import ProblemSpec, get_problem, manufactured_forcing, pde_residual, perturbed, stated_forcing
from .sample import CollocationSet, RarResult, rar_refine, sample_interior, sample_set

log = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi


def build_problem(cfg: RunConfig) -> ProblemSpec:
    p = cfg.problem
    return get_problem(p.name, nu=p.nu, lo=p.lo, hi=p.hi, T=p.T)


def resolve(cfg: RunConfig) -> RunConfig:
    """Fill in derived defaults (layer sizes, no initial points when stationary)."""
    problem = build_problem(cfg)
    net = cfg.network
    if net.sizes is None:
        width = problem.point_dim + (problem.spatial_dim if net.periodic_embedding else 0)
        net = replace(net, sizes=[width, 32, 32, 1])
    pts = cfg.points if problem.time_dependent else replace(cfg.points, initial=0)
    return replace(cfg, network=net, points=pts)


def build_network(cfg: RunConfig, problem: ProblemSpec) -> MlpParams:
    periods = tuple(problem.widths) if cfg.network.periodic_embedding else None
    return init_network(cfg.network.sizes, cfg.network.activation, cfg.seed, periods)


def build_points(cfg: RunConfig, problem: ProblemSpec) -> CollocationSet:
    p = cfg.points
    return sample_set(problem, p.interior, p.boundary, p.initial, cfg.seed)


def schedule_of(cfg: RunConfig) -> TrainSchedule:
    s = cfg.schedule
    return TrainSchedule(s.adam_epochs, s.lbfgs_iters, s.lr, s.lbfgs_memory)


@dataclass
class TrainOutcome:
    params: MlpParams
    trace: list[TraceRow]
    points: CollocationSet
    rar: RarResult | None = None


def train(cfg: RunConfig, problem: ProblemSpec, callback=None) -> TrainOutcome:
    """Initial training followed by RAR refinement rounds when enabled."""
    params = build_network(cfg, problem)
    points = build_points(cfg, problem)
    result = train_pipeline(params, problem, points, schedule_of(cfg), callback=callback)
    trace = list(result.trace)
    params = result.params
    rar = None
    if cfg.rar.enabled:
        retrain = TrainSchedule(cfg.rar.retrain_adam, cfg.rar.retrain_lbfgs, cfg.schedule.lr,
                                cfg.schedule.lbfgs_memory)

        def trainer(p, pts):
            r = train_pipeline(p, problem, pts, retrain)
            offset = len(trace)
            trace.extend(replace(row, phase="rar-" + row.phase) for row in r.trace)
            log.info("RAR retrain: %d rows, loss %.3e", len(trace) - offset,
                     r.trace[-1].total if r.trace else float("nan"))
            return r.params

        rar = rar_refine(trainer, params, problem, points, cfg.rar.to_rar_config(cfg.seed + 1))
        params, points = rar.params, rar.points
    return TrainOutcome(params, trace, points, rar)


def run_dir(cfg: RunConfig) -> Path:
    return Path(cfg.out_dir) / f"{cfg.problem.name}-{cfg.seed}"


TRACE_HEADER = ["phase", "iteration", "residual_term", "boundary_term", "initial_term", "total"]


def write_report(report: ErrorReport, problem: ProblemSpec, out: Path) -> None:
    if problem.time_dependent:
        write_csv(out / "errors.csv", ["t", "h1_error", "residual"],
                  [(r.t, r.h1_error, r.residual) for r in report.rows])
    else:
        write_csv(out / "errors.csv", ["l2_error", "h1_seminorm_error", "h1_error", "residual"],
                  [(report.l2_error, report.h1_seminorm_error, report.h1_error, report.residual_l2)])
    head = ["x1", "x2", "x3"][:problem.spatial_dim] + ["u_exact", "u_pred", "abs_error"]
    for t, rows in report.fields.items():
        name = "field.csv" if t is None else f"field_t{t:g}.csv"
        write_csv(out / name, head, rows)


@dataclass
class ReproduceResult:
    report: ErrorReport
    params: MlpParams
    outcome: TrainOutcome
    out_dir: Path | None = None


def run_reproduce(cfg: RunConfig, write: bool = True) -> ReproduceResult:
    cfg = resolve(cfg)
    problem = build_problem(cfg)
    if problem.exact is None:
        raise UnsupportedProblemError("reproduction needs a problem with an exact solution")
    outcome = train(cfg, problem)
    report = error_report(outcome.params, problem, cfg.grid_n, cfg.times)
    out = None
    if write:
        out = run_dir(cfg)
        out.mkdir(parents=True, exist_ok=True)
        (out / "run_config.resolved").write_text(cfgmod.to_text(cfg), encoding="utf-8")
        save_checkpoint(outcome.params, out / "model.ckpt")
        write_csv(out / "loss_trace.csv", TRACE_HEADER,
                  [(r.phase, r.iteration, r.residual_term, r.boundary_term, r.initial_term, r.total)
                   for r in outcome.trace])
        write_csv(out / "rar_trace.csv", ["round", "interior_size", "mean_residual"],
                  outcome.rar.trace if outcome.rar else [])
        write_report(report, problem, out)
    return ReproduceResult(report, outcome.params, outcome, out)


def run_eval(cfg: RunConfig, params: MlpParams) -> ErrorReport:
    cfg = resolve(cfg)
    problem = build_problem(cfg)
    if params.input_dim != problem.point_dim:
        raise InvalidInputError("checkpoint input width does not match the problem")
    return error_report(params, problem, cfg.grid_n, cfg.times)


@dataclass
class BoundRow:
    checkpoint: float
    reached: bool
    phase: str = ""
    iteration: int = -1
    total_loss: float = float("nan")
    l2_error: float = float("nan")
    h1_error: float = float("nan")


@dataclass
class BoundStudy:
    rows: list[BoundRow]
    slope: float  # fitted log-log slope of h1_error against sqrt(loss)
    spearman: float


def run_bound_study(cfg: RunConfig, checkpoints) -> BoundStudy:
    """Error of the network at the first iterate whose loss is <= each checkpoint.

    Trains without RAR so that every snapshot comes from one optimization path.
    """
    checkpoints = [float(c) for c in checkpoints]
    if not checkpoints or any(a <= b for a, b in zip(checkpoints, checkpoints[1:])):
        raise InvalidInputError("checkpoints must be non-empty and strictly decreasing")
    cfg = resolve(replace(cfg, rar=replace(cfg.rar, enabled=False)))
    problem = build_problem(cfg)
    if problem.exact is None:
        raise UnsupportedProblemError("bound study needs an exact solution")
    snaps: dict[int, tuple] = {}

    def on_row(phase, it, params, bd):
        for i, c in enumerate(checkpoints):
            if i not in snaps and bd.total <= c:
                snaps[i] = (phase, it, bd.total, params)

    train(cfg, problem, callback=on_row)
    rows = []
    for i, c in enumerate(checkpoints):
        if i not in snaps:
            rows.append(BoundRow(c, False))
            continue
        phase, it, loss, params = snaps[i]
        rep = error_report(params, problem, cfg.grid_n, cfg.times)
        rows.append(BoundRow(c, True, phase, it, loss, rep.l2_error, rep.h1_error))
    hit = [r for r in rows if r.reached]
    slope = spear = float("nan")
    if len(hit) >= 2:
        x = np.sqrt([r.total_loss for r in hit])
        y = np.array([r.h1_error for r in hit])
        slope = float(np.polyfit(np.log(x), np.log(y), 1)[0])
        if len(hit) >= 3:
            spear = float(spearmanr(x, y).statistic)
    return BoundStudy(rows, slope, spear)


PERTURBATIONS = ("forcing", "initial", "both")


def perturbation_fns(kind: str, delta: float):
    if kind not in PERTURBATIONS:
        raise InvalidInputError(f"perturbation must be one of {PERTURBATIONS}")
    f = (lambda x: delta * np.sin(TWO_PI * x[:, 0])) if kind in ("forcing", "both") else None
    u0 = (lambda x: delta * np.sin(TWO_PI * x[:, 0]) * np.sin(TWO_PI * x[:, 1])) \
        if kind in ("initial", "both") else None
    return f, u0


def _train_case(cfg: RunConfig, kind: str, delta: float | None) -> np.ndarray:
    problem = build_problem(cfg)
    if delta is not None:
        problem = perturbed(problem, *perturbation_fns(kind, delta))
    return train(cfg, problem).params.flat()


@dataclass
class StabilityRow:
    delta: float
    sup_l2_distance: float
    integrated_h1_distance: float  # sqrt of the time integral of the squared seminorm distance
    initial_l2_distance: float


@dataclass
class StabilityStudy:
    rows: list[StabilityRow]
    fitted_c: float  # sup distance / delta at the largest nonzero delta
    base_params: MlpParams | None = None
    params: dict = field(default_factory=dict)


def run_stability_study(cfg: RunConfig, deltas, perturbation: str = "forcing",
                        n_slices: int = 11, parallel: bool = False) -> StabilityStudy:
    """Distance between networks trained on base and perturbed data, per delta."""
    deltas = sorted(float(d) for d in deltas)
    if not deltas or deltas[0] < 0:
        raise InvalidInputError("deltas must be non-negative")
    perturbation_fns(perturbation, 0.0)
    cfg = resolve(replace(cfg, rar=replace(cfg.rar, enabled=False)))
    problem = build_problem(cfg)
    jobs = [None] + deltas
    if parallel:
        with ProcessPoolExecutor() as ex:
            flats = list(ex.map(_train_case, [cfg] * len(jobs), [perturbation] * len(jobs), jobs))
    else:
        flats = [_train_case(cfg, perturbation, d) for d in jobs]
    template = build_network(cfg, problem)
    base = template.with_flat(flats[0])
    times = np.linspace(0.0, problem.T, n_slices) if problem.time_dependent else [None]
    grids = [midpoint_grid(problem, cfg.grid_n, t) for t in times]
    rows, nets = [], {}
    for d, flat in zip(deltas, flats[1:]):
        other = template.with_flat(flat)
        nets[d] = other
        dist = [network_distance(base, other, g) for g in grids]
        l2 = np.array([a for a, _ in dist])
        semi_sq = np.array([b * b for _, b in dist])
        integ = float(np.sqrt(trapezoid(semi_sq, times))) if problem.time_dependent \
            else float(np.sqrt(semi_sq[0]))
        rows.append(StabilityRow(d, float(l2.max()), integ, float(l2[0])))
    nonzero = [r for r in rows if r.delta > 0]
    c = nonzero[-1].sup_l2_distance / nonzero[-1].delta if nonzero else float("nan")
    return StabilityStudy(rows, c, base, nets)


@dataclass
class ForcingCheck:
    max_residual: float
    samples: list[tuple]  # (x..., manufactured, stated)


def run_verify_forcing(name: str, n_points: int = 10_000, seed: int = 0) -> ForcingCheck:
    """Max |residual| of the exact solution under the manufactured forcing."""
    problem = get_problem(name)
    if problem.exact is None:
        raise UnsupportedProblemError(f"problem {name!r} has no exact solution")
    rng = np.random.default_rng(seed)
    x = sample_interior(problem, n_points, rng)
    r = pde_residual(problem.exact.bundle(x), problem.forcing(x), problem.nu,
                     problem.time_dependent)
    probe = np.array([[0.25, 0.25], [0.1, 0.3], [0.6, 0.2], [0.35, 0.8], [0.9, 0.45]])
    if problem.time_dependent:
        probe = np.column_stack([probe, [0.0, 0.2, 0.5, 0.7, 1.0]])
    man = manufactured_forcing(problem.exact, problem.nu, probe, problem.time_dependent)
    stated = stated_forcing(name, probe, problem.nu)
    samples = [(*p, m, s) for p, m, s in zip(probe, man, stated)]
    return ForcingCheck(float(np.max(np.abs(r))), samples)
