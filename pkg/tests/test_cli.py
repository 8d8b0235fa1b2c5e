import subprocess
import sys

import pytest

from burgers_pinn.cli import main
from burgers_pinn.io import read_csv

TINY = ["--set", "schedule.adam_epochs=3", "--set", "schedule.lbfgs_iters=3",
        "--set", "points.interior=60", "--set", "points.boundary=20", "--set", "points.initial=20",
        "--set", "rar.pool_size=300", "--set", "rar.max_rounds=1", "--set", "rar.retrain_adam=2",
        "--set", "rar.retrain_lbfgs=2", "--set", "grid_n=8"]


def test_verify_forcing_prints_both_forcings(capsys):
    assert main(["verify-forcing", "--problem", "stationary"]) == 0
    out = capsys.readouterr().out
    assert "max |residual of exact|" in out and "f(0.25, 0.25)" in out


def test_reproduce_writes_artifacts_and_eval_matches(tmp_path, capsys):
    args = ["reproduce", "--problem", "nonstationary", "--out-dir", str(tmp_path)] + TINY
    assert main(args) == 0
    run = tmp_path / "nonstationary-0"
    names = {p.name for p in run.iterdir()}
    assert names == {"loss_trace.csv", "errors.csv", "rar_trace.csv", "model.ckpt",
                     "run_config.resolved", "field_t0.csv", "field_t0.5.csv", "field_t1.csv"}
    header, rows = read_csv(run / "errors.csv")
    assert header == ["t", "h1_error", "residual"] and len(rows) == 3
    printed = capsys.readouterr().out
    assert main(["eval", str(run / "model.ckpt"), "--config", str(run / "run_config.resolved")]) == 0
    evaluated = capsys.readouterr().out
    assert evaluated.splitlines() == printed.splitlines()[:3]


def test_config_file_with_flag_override(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("problem.name = nonstationary\nseed = 4\n")
    args = ["reproduce", "--config", str(cfg), "--seed", "9", "--problem", "stationary",
            "--out-dir", str(tmp_path)] + TINY
    assert main(args) == 0
    assert (tmp_path / "stationary-9" / "field.csv").exists()


def test_error_exit_has_tag_on_last_line(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "burgers_pinn", "eval", str(tmp_path / "none.ckpt")],
                          capture_output=True, text=True)
    assert proc.returncode != 0
    assert proc.stdout.strip().splitlines()[-1].startswith("error[io]:")
    assert main(["reproduce", "--set", "network.sizes=[2, 4, 2]"]) != 0


def test_bound_study_rejects_unsorted(capsys):
    assert main(["bound-study", "--checkpoints", "1e-2", "1e-1", "1e-3"]) != 0
    assert capsys.readouterr().out.strip().splitlines()[-1].startswith("error[invalid-input]")
