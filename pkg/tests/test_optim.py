import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from burgers_pinn.errors import NumericalFailureError
from burgers_pinn.net import init_network
from burgers_pinn.optim import (AdamState, LbfgsState, TrainSchedule, adam_step, lbfgs_minimize,
                                strong_wolfe, train_pipeline, two_loop_direction)
from burgers_pinn.pde import composite_loss, get_problem
from burgers_pinn.sample import sample_set


def rosenbrock(x):
    a, b = x
    f = (1 - a) ** 2 + 100 * (b - a * a) ** 2
    g = np.array([-2 * (1 - a) - 400 * a * (b - a * a), 200 * (b - a * a)])
    return f, g


def random_quadratic(seed, n=10):
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    A = q @ np.diag(rng.uniform(0.5, 10.0, n)) @ q.T
    b = rng.standard_normal(n)
    return A, b, lambda x: (0.5 * x @ A @ x - b @ x, A @ x - b)


def test_lbfgs_rosenbrock():
    res = lbfgs_minimize(rosenbrock, np.array([-1.2, 1.0]), max_iters=200)
    assert np.abs(res.x - 1).max() < 1e-6
    assert res.iterations <= 200


@given(seed=st.integers(0, 10**6))
@settings(max_examples=20, deadline=None)
def test_lbfgs_quadratic(seed):
    A, b, f = random_quadratic(seed)
    res = lbfgs_minimize(f, np.zeros(10), LbfgsState(grad_tol=1e-9), max_iters=30)
    assert np.linalg.norm(A @ res.x - b) < 1e-8


def test_accepted_steps_satisfy_strong_wolfe():
    st_ = LbfgsState()
    res = lbfgs_minimize(rosenbrock, np.array([-1.2, 1.0]), st_, max_iters=50)
    for rec in res.line_searches:
        assert rec.f_end <= rec.f_start + st_.c1 * rec.step * rec.slope + 1e-12
    assert all(b <= a for a, b in zip(res.losses, res.losses[1:]))


def test_strong_wolfe_on_parabola_by_brute_force():
    # phi(a) = (a - 2)^2: exact minimizer 2, slope -4 at 0
    phi = lambda a: ((a - 2) ** 2, None, 2 * (a - 2))
    a, fa, _, _ = strong_wolfe(phi, 4.0, -4.0, 1.0, 1e-4, 0.1, 25)
    grid = np.linspace(0, 5, 50001)
    ok = ((grid - 2) ** 2 <= 4 - 1e-4 * 4 * grid) & (np.abs(2 * (grid - 2)) <= 0.1 * 4)
    assert ok[np.argmin(np.abs(grid - a))]


def test_two_loop_reproduces_inverse_hessian_on_quadratic():
    A, _, _ = random_quadratic(3, n=4)
    st_ = LbfgsState(memory_size=4)
    # with A-conjugate steps every secant condition survives, pinning H to A^{-1}
    for s in np.linalg.eigh(A)[1].T:
        st_.push(s, A @ s)
    g = np.random.default_rng(0).standard_normal(4)
    assert np.allclose(two_loop_direction(g, st_.memory), -np.linalg.solve(A, g), rtol=1e-6)


def test_curvature_pairs_rejected_when_not_positive():
    st_ = LbfgsState()
    assert not st_.push(np.array([1.0, 0.0]), np.array([-1.0, 0.0]))
    assert len(st_.memory) == 0


def test_non_finite_start_raises():
    with pytest.raises(NumericalFailureError):
        lbfgs_minimize(lambda x: (np.nan, x), np.ones(2))


def test_non_finite_trials_backtrack():
    # objective blows up for x > 1.5; the minimizer at 1 is still found
    def f(x):
        if x[0] > 1.5:
            return np.inf, np.full(1, np.nan)
        return (x[0] - 1) ** 2, 2 * (x - 1)
    res = lbfgs_minimize(f, np.array([-3.0]), max_iters=50)
    assert res.x[0] == pytest.approx(1.0, abs=1e-8)


def test_adam_quadratic():
    A, b, f = random_quadratic(5)
    x = np.zeros(10)
    state = AdamState.fresh(10, lr=1e-2)
    target = np.linalg.solve(A, b)
    for _ in range(5000):
        x, state = adam_step(x, f(x)[1], state)
    assert np.abs(x - target).max() < 1e-3


def test_adam_first_step_is_lr_times_sign():
    x, st_ = adam_step(np.zeros(3), np.array([2.0, -0.5, 1e-3]), AdamState.fresh(3, lr=0.1))
    assert np.allclose(x, [-0.1, 0.1, -0.1], rtol=1e-4)
    assert st_.step_count == 1
    with pytest.raises(NumericalFailureError):
        adam_step(x, np.array([np.nan, 0, 0]), st_)


def test_pipeline_trace_and_zero_schedule():
    problem = get_problem("stationary")
    pts = sample_set(problem, 50, 20, 0, seed=0)
    p = init_network([2, 5, 1], seed=0)
    res = train_pipeline(p, problem, pts, TrainSchedule(0, 0))
    assert res.trace == [] and np.array_equal(res.params.flat(), p.flat())
    res = train_pipeline(p, problem, pts, TrainSchedule(5, 10))
    phases = [r.phase for r in res.trace]
    assert phases[:5] == ["adam"] * 5 and phases[5:] == ["lbfgs"] * (len(phases) - 5)
    assert res.trace[5].iteration == 0
    final = composite_loss(res.params, problem, pts)
    assert res.trace[-1].total == pytest.approx(final.total, rel=1e-12)
    assert res.trace[-1].total < res.trace[0].total
