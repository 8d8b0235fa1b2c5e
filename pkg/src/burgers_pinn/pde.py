"""Burgers residuals, benchmark problems and the composite PINN loss.

Points are stored row-wise with spatial coordinates first and time last
(time-dependent problems only). All callables on a problem are vectorized
over rows.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .errors import InvalidInputError, UnsupportedProblemError
from .net import DerivativeBundle, MlpParams, derivatives, loss_gradient

BC_KINDS = ("dirichlet_zero", "dirichlet_exact", "periodic")
TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class ExactSolution:
    """Closed-form solution: value, spatial gradient (N, d), Laplacian, du/dt."""

    value: Callable[[np.ndarray], np.ndarray]
    grad: Callable[[np.ndarray], np.ndarray]
    laplacian: Callable[[np.ndarray], np.ndarray]
    du_dt: Callable[[np.ndarray], np.ndarray] | None = None

    def bundle(self, x: np.ndarray) -> DerivativeBundle:
        x = np.atleast_2d(x)
        return DerivativeBundle(self.value(x), self.grad(x), self.laplacian(x),
                                None if self.du_dt is None else self.du_dt(x))


@dataclass
class ProblemSpec:
    name: str
    spatial_dim: int
    time_dependent: bool
    lo: tuple[float, ...]
    hi: tuple[float, ...]
    nu: float
    forcing: Callable[[np.ndarray], np.ndarray]
    bc_kind: str = "dirichlet_zero"
    T: float = 0.0
    initial: Callable[[np.ndarray], np.ndarray] | None = None
    exact: ExactSolution | None = None

    def __post_init__(self):
        self.lo = tuple(float(v) for v in self.lo)
        self.hi = tuple(float(v) for v in self.hi)
        if self.spatial_dim not in (2, 3) or len(self.lo) != self.spatial_dim \
                or len(self.hi) != self.spatial_dim:
            raise InvalidInputError("domain box must match a spatial dimension of 2 or 3")
        if not all(h > l for l, h in zip(self.lo, self.hi)):
            raise InvalidInputError("degenerate domain box")
        if not self.nu > 0:
            raise InvalidInputError("viscosity must be positive")
        if self.bc_kind not in BC_KINDS:
            raise InvalidInputError(f"unknown boundary condition {self.bc_kind!r}")
        if self.bc_kind == "dirichlet_exact" and self.exact is None:
            raise UnsupportedProblemError("dirichlet_exact needs an exact solution")
        if self.time_dependent:
            if not self.T > 0:
                raise InvalidInputError("final time must be positive")
            if self.initial is None:
                raise InvalidInputError("time-dependent problem needs an initial condition")

    @property
    def point_dim(self) -> int:
        return self.spatial_dim + int(self.time_dependent)

    @property
    def widths(self) -> np.ndarray:
        return np.asarray(self.hi) - np.asarray(self.lo)

    @property
    def volume(self) -> float:
        return float(np.prod(self.widths))

    def boundary_value(self, x: np.ndarray) -> np.ndarray:
        if self.bc_kind == "dirichlet_exact":
            return self.exact.value(x)
        return np.zeros(len(x))


def pde_residual(bundle: DerivativeBundle, f_val, nu: float, time_dependent: bool):
    """u_t - nu*Lap(u) + u * sum_i u_{x_i} - f, without u_t when stationary."""
    if time_dependent and bundle.du_dt is None:
        raise InvalidInputError("time-dependent residual needs du/dt")
    grad = np.asarray(bundle.grad_x)
    r = -nu * bundle.laplacian + bundle.value * grad.sum(axis=-1) - f_val
    if time_dependent:
        r = r + bundle.du_dt
    return r


def manufactured_forcing(exact: ExactSolution | None, nu: float, x: np.ndarray,
                         time_dependent: bool) -> np.ndarray:
    """Forcing that makes ``exact`` solve the Burgers equation with viscosity ``nu``."""
    if exact is None:
        raise UnsupportedProblemError("manufactured forcing needs an exact solution")
    b = exact.bundle(x)
    return pde_residual(b, 0.0, nu, time_dependent)


def _sin_product_exact() -> ExactSolution:
    def value(x):
        return np.sin(TWO_PI * x[:, 0]) * np.sin(TWO_PI * x[:, 1])

    def grad(x):
        s1, s2 = np.sin(TWO_PI * x[:, 0]), np.sin(TWO_PI * x[:, 1])
        c1, c2 = np.cos(TWO_PI * x[:, 0]), np.cos(TWO_PI * x[:, 1])
        return TWO_PI * np.stack([c1 * s2, s1 * c2], axis=1)

    def laplacian(x):
        return -2.0 * TWO_PI ** 2 * value(x)

    return ExactSolution(value, grad, laplacian)


def _decaying_wave_exact(nu: float) -> ExactSolution:
    k = 4.0 * np.pi ** 2 * nu

    def parts(x):
        t = x[:, -1]
        a1, a2 = TWO_PI * (x[:, 0] - t), TWO_PI * (x[:, 1] - t)
        return np.exp(-k * t), np.sin(a1), np.sin(a2), np.cos(a1), np.cos(a2)

    def value(x):
        e, s1, s2, _, _ = parts(x)
        return e * s1 * s2

    def grad(x):
        e, s1, s2, c1, c2 = parts(x)
        return TWO_PI * e[:, None] * np.stack([c1 * s2, s1 * c2], axis=1)

    def laplacian(x):
        return -2.0 * TWO_PI ** 2 * value(x)

    def du_dt(x):
        e, s1, s2, c1, c2 = parts(x)
        return -k * e * s1 * s2 - TWO_PI * e * (c1 * s2 + s1 * c2)

    return ExactSolution(value, grad, laplacian, du_dt)


def _with_forcing(problem: ProblemSpec) -> ProblemSpec:
    exact, nu, td = problem.exact, problem.nu, problem.time_dependent
    problem.forcing = lambda x: manufactured_forcing(exact, nu, x, td)
    return problem


def stationary_benchmark(nu: float = np.pi / 4, lo=(0.0, 0.0), hi=(1.0, 1.0)) -> ProblemSpec:
    """u = sin(2 pi x1) sin(2 pi x2) on the unit square, zero Dirichlet data."""
    return _with_forcing(ProblemSpec(
        name="stationary", spatial_dim=2, time_dependent=False, lo=lo, hi=hi, nu=nu,
        forcing=None, bc_kind="dirichlet_zero", exact=_sin_product_exact()))


def nonstationary_benchmark(nu: float = 0.01, lo=(0.0, 0.0), hi=(1.0, 1.0),
                            T: float = 1.0) -> ProblemSpec:
    """Decaying travelling wave exp(-4 pi^2 nu t) sin(2 pi (x1-t)) sin(2 pi (x2-t)), periodic."""
    exact = _decaying_wave_exact(nu)

    def initial(x):
        return np.sin(TWO_PI * x[:, 0]) * np.sin(TWO_PI * x[:, 1])

    return _with_forcing(ProblemSpec(
        name="nonstationary", spatial_dim=2, time_dependent=True, lo=lo, hi=hi, nu=nu,
        forcing=None, bc_kind="periodic", T=T, initial=initial, exact=exact))


PROBLEMS = {"stationary": stationary_benchmark, "nonstationary": nonstationary_benchmark}


def get_problem(name: str, nu: float | None = None, lo: Sequence[float] | None = None,
                hi: Sequence[float] | None = None, T: float | None = None) -> ProblemSpec:
    if name not in PROBLEMS:
        raise UnsupportedProblemError(f"unknown problem {name!r}; choose from {sorted(PROBLEMS)}")
    kw = {}
    if nu is not None:
        kw["nu"] = nu
    if lo is not None:
        kw["lo"] = tuple(lo)
    if hi is not None:
        kw["hi"] = tuple(hi)
    if T is not None:
        if name == "stationary":
            raise InvalidInputError("the stationary problem has no final time")
        kw["T"] = T
    return PROBLEMS[name](**kw)


def perturbed(problem: ProblemSpec, forcing_delta=None, initial_delta=None) -> ProblemSpec:
    """Copy of ``problem`` with additive forcing/initial offsets and no exact solution."""
    f0, u0 = problem.forcing, problem.initial
    forcing = f0 if forcing_delta is None else (lambda x: f0(x) + forcing_delta(x))
    initial = u0 if initial_delta is None else (lambda x: u0(x) + initial_delta(x))
    bc = "dirichlet_zero" if problem.bc_kind == "dirichlet_exact" else problem.bc_kind
    return replace(problem, name=problem.name + "-perturbed", forcing=forcing,
                   initial=initial, exact=None, bc_kind=bc)


def stated_forcing(name: str, x: np.ndarray, nu: float) -> np.ndarray:
    """Forcing formulas as usually quoted for the two benchmarks.

    Kept only for comparison: neither annihilates the residual of its exact
    solution (the stationary one has the opposite sign).
    """
    x = np.atleast_2d(x)
    if name == "stationary":
        s1, s2 = np.sin(TWO_PI * x[:, 0]), np.sin(TWO_PI * x[:, 1])
        c1, c2 = np.cos(TWO_PI * x[:, 0]), np.cos(TWO_PI * x[:, 1])
        return -TWO_PI * s1 * s2 * (c1 * s2 + c2 * s1 + 4.0 * np.pi * nu)
    if name == "nonstationary":
        t = x[:, -1]
        a1, a2 = TWO_PI * (x[:, 0] - t), TWO_PI * (x[:, 1] - t)
        e = np.exp(-4.0 * np.pi ** 2 * nu * t)
        return -TWO_PI * e * ((np.cos(a1) + np.cos(a2)) * (1.0 - e * (np.sin(a1) + np.sin(a2))))
    raise UnsupportedProblemError(f"no stated forcing for {name!r}")


@dataclass(frozen=True)
class LossBreakdown:
    residual_term: float
    boundary_term: float
    initial_term: float = 0.0

    @property
    def total(self) -> float:
        return (self.residual_term + self.boundary_term) + self.initial_term


def _check_points(problem: ProblemSpec, points) -> None:
    if len(points.interior) == 0:
        raise InvalidInputError("empty interior collocation set")
    if (len(points.initial) > 0) != problem.time_dependent:
        raise InvalidInputError("initial set must be empty exactly when the problem is stationary")
    if problem.bc_kind == "periodic" and len(points.boundary) % 2:
        raise InvalidInputError("periodic boundary set must hold matched pairs")


class _LossTargets:
    """Per-point targets of the composite loss, fixed for a collocation set."""

    def __init__(self, problem: ProblemSpec, points):
        _check_points(problem, points)
        self.problem = problem
        self.n_int = len(points.interior)
        self.n_bnd = len(points.boundary)
        self.n_ini = len(points.initial)
        self.x = np.concatenate([points.interior, points.boundary, points.initial], axis=0)
        self.f = problem.forcing(points.interior)
        self.periodic = problem.bc_kind == "periodic"
        self.g = None if self.periodic or self.n_bnd == 0 else problem.boundary_value(points.boundary)
        self.u0 = None
        if self.n_ini:
            self.u0 = problem.initial(points.initial[:, :problem.spatial_dim])

    def __call__(self, bundle: DerivativeBundle):
        p, ni, nb = self.problem, self.n_int, self.n_bnd
        u = bundle.value
        cot_v = np.zeros_like(u)
        cot_g = np.zeros_like(bundle.grad_x)
        cot_l = np.zeros_like(u)
        cot_t = None if bundle.du_dt is None else np.zeros_like(u)

        inner = bundle.take(slice(0, ni))
        r = pde_residual(inner, self.f, p.nu, p.time_dependent)
        res_term = float(np.mean(r * r))
        dr = 2.0 * r / ni
        sum_grad = inner.grad_x.sum(axis=1)
        cot_v[:ni] = dr * sum_grad
        cot_g[:ni] = (dr * inner.value)[:, None]
        cot_l[:ni] = -p.nu * dr
        if cot_t is not None:
            cot_t[:ni] = dr

        bnd_term = 0.0
        if nb:
            ub = u[ni:ni + nb]
            if self.periodic:
                half = nb // 2
                m = ub[:half] - ub[half:]
                bnd_term = float(np.mean(m * m))
                dm = 2.0 * m / half
                cot_v[ni:ni + half] = dm
                cot_v[ni + half:ni + nb] = -dm
            else:
                m = ub - self.g
                bnd_term = float(np.mean(m * m))
                cot_v[ni:ni + nb] = 2.0 * m / nb

        ini_term = 0.0
        if self.n_ini:
            m = u[ni + nb:] - self.u0
            ini_term = float(np.mean(m * m))
            cot_v[ni + nb:] = 2.0 * m / self.n_ini

        self.last = LossBreakdown(res_term, bnd_term, ini_term)
        return self.last.total, DerivativeBundle(cot_v, cot_g, cot_l, cot_t)


def composite_loss(params: MlpParams, problem: ProblemSpec, points) -> LossBreakdown:
    """Mean-square residual, boundary and initial mismatch of ``params`` on ``points``."""
    targets = _LossTargets(problem, points)
    targets(derivatives(params, targets.x, problem.time_dependent))
    return targets.last


class LossObjective:
    """Composite loss as a function of the flat parameter vector, with gradient."""

    def __init__(self, template: MlpParams, problem: ProblemSpec, points):
        self.template = template
        self.problem = problem
        self.targets = _LossTargets(problem, points)
        self.last_x = None
        self.last_breakdown = None
        self.n_evals = 0

    def __call__(self, flat: np.ndarray):
        params = self.template.with_flat(flat)
        value, grad = loss_gradient(params, self.targets.x, self.targets,
                                    self.problem.time_dependent)
        self.n_evals += 1
        self.last_x = np.array(flat, copy=True)
        self.last_breakdown = self.targets.last
        return value, grad.flat()

    def breakdown_at(self, flat: np.ndarray) -> LossBreakdown:
        if self.last_x is not None and np.array_equal(flat, self.last_x):
            return self.last_breakdown
        return composite_loss(self.template.with_flat(flat), self.problem, _AsSet(self.targets))


@dataclass
class _AsSet:
    targets: _LossTargets
    interior: np.ndarray = field(init=False)
    boundary: np.ndarray = field(init=False)
    initial: np.ndarray = field(init=False)

    def __post_init__(self):
        t = self.targets
        self.interior = t.x[:t.n_int]
        self.boundary = t.x[t.n_int:t.n_int + t.n_bnd]
        self.initial = t.x[t.n_int + t.n_bnd:]
