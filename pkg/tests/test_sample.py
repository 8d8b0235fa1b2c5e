import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from burgers_pinn.errors import InvalidInputError
from burgers_pinn.net import init_network
from burgers_pinn.pde import get_problem
from burgers_pinn.sample import (RarConfig, mean_residual, pointwise_residual, rar_refine,
                                 sample_boundary, sample_interior, sample_set)


@given(seed=st.integers(0, 10**6), n=st.integers(1, 200), nb=st.integers(0, 60))
@settings(max_examples=40)
def test_points_lie_in_domain(seed, n, nb):
    p = get_problem("stationary")
    s = sample_set(p, n, nb, 0, seed)
    assert s.sizes() == (n, nb, 0)
    assert np.all((s.interior > 0) & (s.interior < 1))
    on_face = np.isclose(s.boundary, 0.0) | np.isclose(s.boundary, 1.0)
    assert np.all(on_face.any(axis=1))


@given(seed=st.integers(0, 10**6), half=st.integers(0, 50))
@settings(max_examples=40)
def test_nonstationary_sets(seed, half):
    p = get_problem("nonstationary")
    s = sample_set(p, 20, 2 * half, 15, seed)
    assert np.all(s.initial[:, 2] == 0.0)
    assert np.all((s.interior[:, 2] > 0) & (s.interior[:, 2] <= 1))
    lo, hi = s.boundary[:half], s.boundary[half:]
    assert np.array_equal(lo[:, 2], hi[:, 2])


def test_sampling_is_seeded():
    p = get_problem("nonstationary")
    a, b = sample_set(p, 50, 20, 10, 3), sample_set(p, 50, 20, 10, 3)
    assert all(np.array_equal(x, y) for x, y in zip(
        (a.interior, a.boundary, a.initial), (b.interior, b.boundary, b.initial)))


def test_boundary_faces_are_area_weighted():
    p = get_problem("stationary", lo=[0, 0], hi=[3, 1])
    x = sample_boundary(p, 40000, np.random.default_rng(0))
    on_x_face = np.isclose(x[:, 0], 0) | np.isclose(x[:, 0], 3)
    # faces x1 = const have length 1, faces x2 = const have length 3
    assert on_x_face.mean() == pytest.approx(0.25, abs=0.01)


def test_odd_periodic_boundary_rejected():
    with pytest.raises(InvalidInputError):
        sample_boundary(get_problem("nonstationary"), 5, np.random.default_rng(0))


def test_rar_config_validation():
    with pytest.raises(InvalidInputError):
        RarConfig(pool_size=10, add_per_round=20)
    with pytest.raises(InvalidInputError):
        RarConfig(mean_residual_threshold=0)


def test_rar_adds_worst_points_and_respects_round_cap():
    p = get_problem("stationary")
    net = init_network([2, 5, 1], seed=0)
    pts = sample_set(p, 30, 10, 0, seed=0)
    calls = []

    def trainer(params, points):
        calls.append(len(points.interior))
        return params

    cfg = RarConfig(pool_size=500, mean_residual_threshold=1e-9, add_per_round=7, max_rounds=3)
    res = rar_refine(trainer, net, p, pts, cfg)
    assert calls == [37, 44, 51]
    assert res.rounds_used == 3 and not res.converged
    assert [row[1] for row in res.trace] == [30, 37, 44, 51]
    # the added points are the worst of the round-0 pool
    pool = sample_interior(p, 500, np.random.default_rng(cfg.seed))
    r = np.abs(pointwise_residual(net, p, pool))
    added = res.points.interior[30:37]
    assert np.abs(pointwise_residual(net, p, added)).min() >= np.sort(r)[-7] - 1e-12


def test_rar_stops_immediately_below_threshold():
    p = get_problem("stationary")
    net = init_network([2, 5, 1], seed=0)
    pts = sample_set(p, 30, 10, 0, seed=0)
    res = rar_refine(lambda a, b: pytest.fail("should not retrain"), net, p, pts,
                     RarConfig(pool_size=200, mean_residual_threshold=1e6))
    assert res.rounds_used == 0 and res.converged
    assert res.final_mean_residual == pytest.approx(
        mean_residual(net, p, sample_interior(p, 200, np.random.default_rng(0))))
