import numpy as np
import pytest

from burgers_pinn import config as cfgmod
from burgers_pinn.errors import InvalidInputError, UnsupportedProblemError
from burgers_pinn.experiments import (build_network, build_problem, perturbation_fns, resolve,
                                      run_bound_study, run_reproduce, run_stability_study,
                                      run_verify_forcing)
from burgers_pinn.metrics import error_report
from burgers_pinn.pde import composite_loss


def tiny(problem="stationary", **extra):
    cfg = cfgmod.RunConfig(seed=1)
    settings = {"problem.name": problem, "schedule.adam_epochs": 10, "schedule.lbfgs_iters": 10,
                "points.interior": 100, "points.boundary": 30, "points.initial": 30,
                "rar.enabled": False, "grid_n": 8, "network.sizes": None}
    settings.update(extra)
    for k, v in settings.items():
        cfg = cfgmod.set_value(cfg, k, v)
    return cfg


def test_resolve_fills_sizes_and_drops_initial_points():
    cfg = resolve(tiny("stationary"))
    assert cfg.network.sizes == [2, 32, 32, 1] and cfg.points.initial == 0
    cfg = resolve(tiny("nonstationary", **{"network.periodic_embedding": True}))
    assert cfg.network.sizes == [5, 32, 32, 1]
    p = build_network(cfg, build_problem(cfg))
    assert p.periods == (1.0, 1.0) and p.input_dim == 3


def test_zero_schedule_reports_untrained_errors():
    cfg = tiny(**{"schedule.adam_epochs": 0, "schedule.lbfgs_iters": 0})
    res = run_reproduce(cfg, write=False)
    r = resolve(cfg)
    untrained = error_report(build_network(r, build_problem(r)), build_problem(r), r.grid_n)
    assert res.report.h1_error == untrained.h1_error
    assert res.report.residual_l2 == untrained.residual_l2
    assert res.outcome.trace == []


def test_reproduce_is_deterministic():
    cfg = tiny("nonstationary", **{"rar.enabled": True, "rar.pool_size": 500,
                                   "rar.max_rounds": 1, "rar.retrain_adam": 3,
                                   "rar.retrain_lbfgs": 3})
    a, b = run_reproduce(cfg, write=False), run_reproduce(cfg, write=False)
    assert a.report.rows == b.report.rows
    assert np.array_equal(a.params.flat(), b.params.flat())
    assert a.outcome.rar.trace == b.outcome.rar.trace


def test_bound_study_snapshot_at_start_and_unreached_rows():
    cfg = tiny()
    r = resolve(cfg)
    from burgers_pinn.experiments import build_points
    problem = build_problem(r)
    start = composite_loss(build_network(r, problem), problem, build_points(r, problem)).total
    study = run_bound_study(cfg, [start, 1e-12])
    first, last = study.rows
    assert first.reached and first.phase == "adam" and first.iteration == 0
    assert first.total_loss == start
    assert not last.reached and np.isnan(last.h1_error)


def test_bound_study_orders_and_fits():
    study = run_bound_study(tiny(**{"schedule.adam_epochs": 200}), [900.0, 500.0, 300.0, 200.0])
    hit = [r for r in study.rows if r.reached]
    assert len(hit) >= 3
    assert all(a.total_loss >= b.total_loss for a, b in zip(hit, hit[1:]))
    assert np.isfinite(study.slope) and -1 <= study.spearman <= 1


@pytest.mark.parametrize("bad", [[], [1e-2, 1e-1], [1e-2, 1e-2]])
def test_bound_study_rejects_bad_checkpoints(bad):
    with pytest.raises(InvalidInputError):
        run_bound_study(tiny(), bad)


def test_stability_zero_delta_gives_zero_distance():
    study = run_stability_study(tiny("nonstationary"), [0.0, 0.1], "forcing", n_slices=3)
    assert study.rows[0].sup_l2_distance == 0.0
    assert study.rows[0].integrated_h1_distance == 0.0
    assert study.rows[1].sup_l2_distance > 0
    assert study.fitted_c == pytest.approx(study.rows[1].sup_l2_distance / 0.1)


def test_stability_initial_perturbation_moves_initial_slice():
    study = run_stability_study(tiny("nonstationary"), [0.1], "initial", n_slices=3)
    assert study.rows[0].initial_l2_distance > 0


def test_perturbation_shapes():
    f, u0 = perturbation_fns("both", 0.5)
    x = np.array([[0.25, 0.25, 0.3]])
    assert f(x)[0] == pytest.approx(0.5) and u0(x[:, :2])[0] == pytest.approx(0.5)
    f, u0 = perturbation_fns("forcing", 0.5)
    assert u0 is None
    with pytest.raises(InvalidInputError):
        perturbation_fns("boundary", 0.1)


def test_verify_forcing_reports_sign_flip():
    chk = run_verify_forcing("stationary", 1000)
    x1, x2, man, stated = chk.samples[0]
    assert (x1, x2) == (0.25, 0.25)
    assert man == pytest.approx(2 * np.pi ** 3) and stated == pytest.approx(-man)


def test_eval_rejects_mismatched_checkpoint():
    from burgers_pinn.experiments import run_eval
    from burgers_pinn.net import init_network
    with pytest.raises(InvalidInputError):
        run_eval(tiny("stationary"), init_network([3, 4, 1]))


def test_verify_forcing_unknown_problem():
    with pytest.raises((UnsupportedProblemError, InvalidInputError)):
        run_verify_forcing("heat")


def test_parallel_study_matches_sequential():
    cfg = tiny("nonstationary")
    seq = run_stability_study(cfg, [0.05], "forcing", n_slices=3)
    par = run_stability_study(cfg, [0.05], "forcing", n_slices=3, parallel=True)
    assert seq.rows == par.rows
