import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from burgers_pinn import config as cfgmod
from burgers_pinn.errors import InvalidInputError
from burgers_pinn.io import load_checkpoint, parse_checkpoint, read_csv, save_checkpoint, write_csv
from burgers_pinn.net import forward, init_network

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


@st.composite
def run_configs(draw):
    c = cfgmod.RunConfig()
    c = cfgmod.set_value(c, "problem.name", draw(st.sampled_from(["stationary", "nonstationary"])))
    c = cfgmod.set_value(c, "problem.nu", draw(st.none() | st.floats(1e-4, 10)))
    c = cfgmod.set_value(c, "network.sizes", draw(st.none() | st.lists(
        st.integers(1, 64), min_size=2, max_size=5)))
    c = cfgmod.set_value(c, "network.activation", draw(st.sampled_from(["tanh", "sigmoid"])))
    c = cfgmod.set_value(c, "schedule.lr", draw(st.floats(1e-8, 1.0)))
    c = cfgmod.set_value(c, "rar.enabled", draw(st.booleans()))
    c = cfgmod.set_value(c, "times", draw(st.lists(finite, max_size=4)))
    c = cfgmod.set_value(c, "seed", draw(st.integers(0, 2**31)))
    c = cfgmod.set_value(c, "out_dir", draw(st.text(min_size=1, max_size=20)))
    return c


@given(cfg=run_configs())
@settings(max_examples=100)
def test_config_round_trip(cfg):
    assert cfgmod.from_text(cfgmod.to_text(cfg)) == cfg


def test_config_file_and_comments(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# demo\nproblem.name = nonstationary\nschedule.adam_epochs = 10\n"
                    "network.sizes = [3, 8, 1]\n")
    cfg = cfgmod.load(path)
    assert cfg.problem.name == "nonstationary"
    assert cfg.schedule.adam_epochs == 10 and cfg.network.sizes == [3, 8, 1]


@pytest.mark.parametrize("line", ["nope", "seed = 1.5", "rar.enabled = 1", "bogus.key = 3",
                                  "points.interior = null"])
def test_config_rejects_bad_lines(line):
    with pytest.raises(InvalidInputError):
        cfgmod.from_text(line)


@given(seed=st.integers(0, 10**6), activation=st.sampled_from(["tanh", "sigmoid"]),
       periodic=st.booleans())
@settings(max_examples=30)
def test_checkpoint_round_trip_is_bitwise(seed, activation, periodic):
    p = init_network([5 if periodic else 3, 7, 4, 1], activation, seed,
                     (1.0, 0.5) if periodic else None)
    p = p.with_flat(p.flat() + np.random.default_rng(seed).standard_normal(p.n_params))
    from burgers_pinn.io import checkpoint_text
    q = parse_checkpoint(checkpoint_text(p))
    assert np.array_equal(q.flat(), p.flat()) and q.periods == p.periods
    x = np.random.default_rng(1).uniform(size=(50, 3))
    assert np.array_equal(forward(q, x), forward(p, x))


def test_checkpoint_file_layout(tmp_path):
    p = init_network([2, 2, 1], seed=0)
    path = save_checkpoint(p, tmp_path / "m.ckpt")
    lines = path.read_text().splitlines()
    assert lines[0] == "layers: 2 2 1; activation: tanh"
    assert float(lines[1]) == p.weights[0][0, 0] and float(lines[2]) == p.weights[0][0, 1]
    assert float(lines[5]) == p.biases[0][0]
    assert len(lines) == 1 + p.n_params
    assert np.array_equal(load_checkpoint(path).flat(), p.flat())


def test_checkpoint_size_mismatch():
    with pytest.raises(InvalidInputError):
        parse_checkpoint("layers: 2 2 1; activation: tanh\n1\n2\n")
    with pytest.raises(InvalidInputError):
        parse_checkpoint("activation: tanh\n")


def test_csv_format(tmp_path):
    path = write_csv(tmp_path / "a.csv", ["a", "b"], [(1, 0.1), ("x", 1e-20)])
    raw = path.read_bytes()
    assert b"\r" not in raw and raw.endswith(b"\n")
    assert raw.decode().splitlines() == ["a,b", "1,0.10000000000000001", "x,9.9999999999999995e-21"]
    header, rows = read_csv(path)
    assert header == ["a", "b"] and float(rows[0][1]) == 0.1
