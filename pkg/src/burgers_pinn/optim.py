"""Adam and L-BFGS over flat parameter vectors, plus the two-stage PINN trainer."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import InvalidInputError, NumericalFailureError
from .net import MlpParams
from .pde import LossBreakdown, LossObjective, ProblemSpec

Objective = Callable[[np.ndarray], "tuple[float, np.ndarray]"]


@dataclass
class AdamState:
    first_moment: np.ndarray
    second_moment: np.ndarray
    step_count: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def fresh(cls, n: int, lr: float = 1e-3, **kw) -> "AdamState":
        return cls(np.zeros(n), np.zeros(n), lr=lr, **kw)


def adam_step(x: np.ndarray, grad: np.ndarray, state: AdamState):
    """One bias-corrected Adam update; returns (new x, state) with state updated in place."""
    grad = np.asarray(grad, dtype=np.float64)
    if grad.shape != x.shape or state.first_moment.shape != x.shape:
        raise InvalidInputError("parameter, gradient and moment shapes differ")
    if not np.isfinite(grad).all():
        raise NumericalFailureError("non-finite gradient in Adam step")
    state.step_count += 1
    b1, b2 = state.beta1, state.beta2
    state.first_moment = b1 * state.first_moment + (1.0 - b1) * grad
    state.second_moment = b2 * state.second_moment + (1.0 - b2) * grad * grad
    m_hat = state.first_moment / (1.0 - b1 ** state.step_count)
    v_hat = state.second_moment / (1.0 - b2 ** state.step_count)
    return x - state.lr * m_hat / (np.sqrt(v_hat) + state.epsilon), state


@dataclass
class LbfgsState:
    memory_size: int = 20
    c1: float = 1e-4
    c2: float = 0.9
    max_evals: int = 25
    grad_tol: float = 1e-9
    memory: deque = field(default_factory=deque)

    def push(self, s: np.ndarray, y: np.ndarray) -> bool:
        sy = float(s @ y)
        if not (sy > 0.0 and sy > np.finfo(float).eps * float(y @ y)):
            return False
        self.memory.append((s, y, 1.0 / sy))
        while len(self.memory) > self.memory_size:
            self.memory.popleft()
        return True


def two_loop_direction(grad: np.ndarray, memory) -> np.ndarray:
    """-H grad for the L-BFGS inverse-Hessian approximation held in ``memory``."""
    q = grad.copy()
    alphas = []
    for s, y, rho in reversed(memory):
        a = rho * (s @ q)
        q -= a * y
        alphas.append(a)
    if memory:
        s, y, _ = memory[-1]
        q *= (s @ y) / (y @ y)
    for (s, y, rho), a in zip(memory, reversed(alphas)):
        b = rho * (y @ q)
        q += (a - b) * s
    return -q


def _cubic_min(a1, f1, d1, a2, f2, d2, lo, hi):
    """Minimizer of the cubic through two (step, value, slope) samples, clamped to [lo, hi]."""
    e1 = d1 + d2 - 3.0 * (f1 - f2) / (a1 - a2)
    disc = e1 * e1 - d1 * d2
    if not np.isfinite(disc) or disc < 0:
        return 0.5 * (lo + hi)
    e2 = np.sqrt(disc)
    if a1 > a2:
        a1, f1, d1, a2, f2, d2 = a2, f2, d2, a1, f1, d1
    t = a2 - (a2 - a1) * (d2 + e2 - e1) / (d2 - d1 + 2.0 * e2)
    if not np.isfinite(t):
        return 0.5 * (lo + hi)
    return min(max(t, lo), hi)


@dataclass
class LineSearchRecord:
    step: float
    f_start: float
    f_end: float
    slope: float
    evals: int


def strong_wolfe(phi, f0: float, d0: float, step: float, c1: float, c2: float,
                 max_evals: int):
    """Find a step satisfying the strong Wolfe conditions.

    ``phi(a)`` returns (f, g, slope) at x + a*d. Returns (a, f, g, evals) or
    (None, None, None, evals) when ``max_evals`` is exhausted.
    """
    evals = 0
    a_prev, f_prev, d_prev = 0.0, f0, d0
    a = step
    f_noise = 1e-12 * abs(f0)

    def approx_ok(f_a, d_a):
        # near convergence f stops resolving the Armijo decrease; accept the
        # slope-only (approximate Wolfe) form when f is flat to roundoff
        return (np.isfinite(f_a) and f_a <= f0 + f_noise and d_a <= (2 * c1 - 1) * d0
                and abs(d_a) <= -c2 * d0)

    def zoom(lo, f_lo, d_lo, hi, f_hi, d_hi):
        nonlocal evals
        while evals < max_evals:
            width = abs(hi - lo)
            left, right = min(lo, hi), max(lo, hi)
            t = _cubic_min(lo, f_lo, d_lo, hi, f_hi, d_hi, left, right) \
                if np.isfinite(f_hi) and np.isfinite(d_hi) else 0.5 * (lo + hi)
            # stay away from the bracket ends
            if min(t - left, right - t) < 0.1 * width:
                t = 0.5 * (lo + hi)
            f_t, g_t, d_t = phi(t)
            evals += 1
            if approx_ok(f_t, d_t):
                return t, f_t, g_t
            if f_t > f0 + c1 * t * d0 or f_t >= f_lo:
                hi, f_hi, d_hi = t, f_t, d_t
            else:
                if abs(d_t) <= -c2 * d0:
                    return t, f_t, g_t
                if d_t * (hi - lo) >= 0:
                    hi, f_hi, d_hi = lo, f_lo, d_lo
                lo, f_lo, d_lo = t, f_t, d_t
            if abs(hi - lo) < 1e-16 * max(1.0, abs(lo)):
                break
        return None, None, None

    first = True
    while evals < max_evals:
        f_a, g_a, d_a = phi(a)
        evals += 1
        if approx_ok(f_a, d_a):
            return a, f_a, g_a, evals
        if not np.isfinite(f_a) or f_a > f0 + c1 * a * d0 or (not first and f_a >= f_prev):
            r = zoom(a_prev, f_prev, d_prev, a, f_a, d_a)
            return (*r, evals)
        if abs(d_a) <= -c2 * d0:
            return a, f_a, g_a, evals
        if d_a >= 0:
            r = zoom(a, f_a, d_a, a_prev, f_prev, d_prev)
            return (*r, evals)
        lo, hi = a + 0.01 * (a - a_prev), 10.0 * a
        a_next = _cubic_min(a_prev, f_prev, d_prev, a, f_a, d_a, lo, hi)
        a_prev, f_prev, d_prev = a, f_a, d_a
        a = a_next
        first = False
    return None, None, None, evals


@dataclass
class LbfgsResult:
    x: np.ndarray
    loss: float
    iterations: int
    reason: str
    n_evals: int
    line_searches: list[LineSearchRecord] = field(default_factory=list)
    losses: list[float] = field(default_factory=list)


def lbfgs_minimize(objective: Objective, x0: np.ndarray, state: LbfgsState | None = None,
                   max_iters: int = 5000, callback=None) -> LbfgsResult:
    """Limited-memory BFGS with a strong Wolfe line search.

    Terminates with reason "gradient_tolerance", "max_iters" or
    "line_search_failed". ``callback(iteration, x, f)`` runs after every
    accepted step.
    """
    state = state or LbfgsState()
    x = np.array(x0, dtype=np.float64)
    f, g = objective(x)
    n_evals = 1
    if not np.isfinite(f) or not np.isfinite(g).all():
        raise NumericalFailureError("non-finite objective at the starting point")
    records, losses = [], [f]
    reason = "max_iters"
    it = 0

    def phi_for(d):
        def phi(a):
            try:
                fa, ga = objective(x + a * d)
            except NumericalFailureError:
                return np.inf, None, np.nan
            if not np.isfinite(fa) or not np.isfinite(ga).all():
                return np.inf, None, np.nan
            return fa, ga, float(ga @ d)
        return phi

    while it < max_iters:
        if np.linalg.norm(g) <= state.grad_tol:
            reason = "gradient_tolerance"
            break
        d = two_loop_direction(g, state.memory)
        slope = float(g @ d)
        if not slope < 0:
            state.memory.clear()
            d, slope = -g, -float(g @ g)
        step = min(1.0, 1.0 / np.abs(g).sum()) if not state.memory else 1.0
        a, f_new, g_new, ev = strong_wolfe(phi_for(d), f, slope, step, state.c1, state.c2,
                                           state.max_evals)
        n_evals += ev
        if a is None and state.memory:
            # retry once from steepest descent with a cleared memory
            state.memory.clear()
            d, slope = -g, -float(g @ g)
            step = min(1.0, 1.0 / np.abs(g).sum())
            a, f_new, g_new, ev = strong_wolfe(phi_for(d), f, slope, step, state.c1,
                                               state.c2, state.max_evals)
            n_evals += ev
        if a is None:
            reason = "line_search_failed"
            break
        s = a * d
        x = x + s
        state.push(s, g_new - g)
        records.append(LineSearchRecord(a, f, f_new, slope, ev))
        f, g = f_new, g_new
        losses.append(f)
        it += 1
        if callback is not None:
            callback(it, x, f)
    return LbfgsResult(x, f, it, reason, n_evals, records, losses)


@dataclass
class TrainSchedule:
    adam_epochs: int = 3000
    lbfgs_iters: int = 5000
    lr: float = 1e-3
    lbfgs_memory: int = 100  # LbfgsState keeps 20; longer memory trains PINN losses much faster


@dataclass
class TraceRow:
    phase: str
    iteration: int
    residual_term: float
    boundary_term: float
    initial_term: float
    total: float


@dataclass
class TrainResult:
    params: MlpParams
    trace: list[TraceRow]
    lbfgs: LbfgsResult | None = None


def _row(phase, it, bd: LossBreakdown) -> TraceRow:
    return TraceRow(phase, it, bd.residual_term, bd.boundary_term, bd.initial_term, bd.total)


def train_pipeline(params: MlpParams, problem: ProblemSpec, points,
                   schedule: TrainSchedule | None = None, callback=None,
                   lbfgs_state: LbfgsState | None = None) -> TrainResult:
    """Full-batch Adam for ``adam_epochs`` steps, then L-BFGS for up to ``lbfgs_iters``.

    The trace holds one row per Adam step (loss before the step) and one per
    L-BFGS iterate, iterate 0 being the starting point. ``callback(phase,
    iteration, params, breakdown)`` sees every recorded row.
    """
    schedule = schedule or TrainSchedule()
    obj = LossObjective(params, problem, points)
    x = params.flat()
    trace: list[TraceRow] = []

    def emit(phase, it, flat, bd):
        trace.append(_row(phase, it, bd))
        if callback is not None:
            callback(phase, it, params.with_flat(flat), bd)

    if schedule.adam_epochs > 0:
        state = AdamState.fresh(x.size, lr=schedule.lr)
        for epoch in range(schedule.adam_epochs):
            _, g = obj(x)
            emit("adam", epoch, x, obj.last_breakdown)
            x, state = adam_step(x, g, state)

    result = None
    if schedule.lbfgs_iters > 0:
        first = {}

        def on_start(flat):
            value, grad = obj(flat)
            if not first:
                first["done"] = True
                emit("lbfgs", 0, flat, obj.last_breakdown)
            return value, grad

        result = lbfgs_minimize(on_start, x, lbfgs_state or LbfgsState(schedule.lbfgs_memory), schedule.lbfgs_iters,
                                callback=lambda it, xk, f: emit("lbfgs", it, xk, obj.breakdown_at(xk)))
        x = result.x
    return TrainResult(params.with_flat(x), trace, result)
