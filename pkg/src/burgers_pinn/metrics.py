"""Midpoint quadrature grids and Sobolev-type error norms."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InvalidInputError, UnsupportedProblemError
from .net import MlpParams, derivatives, forward
from .pde import ExactSolution, ProblemSpec, pde_residual


@dataclass
class QuadratureGrid:
    """Tensor midpoint grid; ``points`` carry a time column when ``t`` is set."""

    points: np.ndarray
    weights: np.ndarray
    n_per_axis: int
    t: float | None = None

    @property
    def spatial(self) -> np.ndarray:
        return self.points if self.t is None else self.points[:, :-1]


def midpoint_grid(problem: ProblemSpec, n_per_axis: int = 32, t: float | None = None) -> QuadratureGrid:
    if n_per_axis < 1:
        raise InvalidInputError("need at least one grid point per axis")
    axes = [lo + (np.arange(n_per_axis) + 0.5) * (hi - lo) / n_per_axis
            for lo, hi in zip(problem.lo, problem.hi)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    if problem.time_dependent:
        if t is None:
            raise InvalidInputError("time-dependent problems need a time slice")
        pts = np.concatenate([pts, np.full((len(pts), 1), float(t))], axis=1)
    elif t is not None:
        raise InvalidInputError("stationary problems have no time slice")
    w = np.full(len(pts), problem.volume / len(pts))
    return QuadratureGrid(pts, w, n_per_axis, t)


def weighted_norm(values: np.ndarray, weights: np.ndarray) -> float:
    """sqrt(sum w |v|^2), with vector-valued rows summed over components."""
    v = np.asarray(values)
    sq = v * v if v.ndim == 1 else (v * v).sum(axis=1)
    return float(np.sqrt(weights @ sq))


def _exact_or_fail(exact):
    if exact is None:
        raise UnsupportedProblemError("error norms need an exact solution")
    return exact


def l2_error(params: MlpParams, exact: ExactSolution, grid: QuadratureGrid) -> float:
    _exact_or_fail(exact)
    return weighted_norm(forward(params, grid.points) - exact.value(grid.points), grid.weights)


def h1_error(params: MlpParams, exact: ExactSolution, grid: QuadratureGrid) -> tuple[float, float]:
    """(H1 seminorm error, full H1 error) on the grid."""
    _exact_or_fail(exact)
    b = derivatives(params, grid.points, grid.t is not None)
    l2 = weighted_norm(b.value - exact.value(grid.points), grid.weights)
    semi = weighted_norm(b.grad_x - exact.grad(grid.points), grid.weights)
    return semi, float(np.sqrt(l2 * l2 + semi * semi))


def residual_norm(params: MlpParams, problem: ProblemSpec, grid: QuadratureGrid) -> float:
    """L2 norm of the strong-form residual over the grid (a space slice when time-dependent)."""
    b = derivatives(params, grid.points, problem.time_dependent)
    r = pde_residual(b, problem.forcing(grid.points), problem.nu, problem.time_dependent)
    return weighted_norm(r, grid.weights)


@dataclass
class SliceRow:
    t: float
    l2_error: float
    h1_seminorm_error: float
    h1_error: float
    residual: float


@dataclass
class ErrorReport:
    l2_error: float
    h1_seminorm_error: float
    h1_error: float
    residual_l2: float
    rows: list[SliceRow] = field(default_factory=list)
    fields: dict = field(default_factory=dict)


def _grid_errors(params, problem, grid):
    exact = _exact_or_fail(problem.exact)
    b = derivatives(params, grid.points, problem.time_dependent)
    u_ex = exact.value(grid.points)
    l2 = weighted_norm(b.value - u_ex, grid.weights)
    semi = weighted_norm(b.grad_x - exact.grad(grid.points), grid.weights)
    r = pde_residual(b, problem.forcing(grid.points), problem.nu, problem.time_dependent)
    field_rows = np.column_stack([grid.spatial, u_ex, b.value, np.abs(b.value - u_ex)])
    return l2, semi, float(np.hypot(l2, semi)), weighted_norm(r, grid.weights), field_rows


def time_slice_report(params: MlpParams, problem: ProblemSpec, times: Sequence[float],
                      n_per_axis: int = 32) -> ErrorReport:
    """Per-time errors; the summary fields hold the worst slice."""
    if not problem.time_dependent:
        raise InvalidInputError("time slices need a time-dependent problem")
    rows, fields = [], {}
    for t in times:
        t = float(t)
        if not 0.0 <= t <= problem.T:
            raise InvalidInputError(f"time {t} outside [0, {problem.T}]")
        l2, semi, h1, res, fr = _grid_errors(params, problem, midpoint_grid(problem, n_per_axis, t))
        rows.append(SliceRow(t, l2, semi, h1, res))
        fields[t] = fr
    if not rows:
        raise InvalidInputError("no time slices requested")
    return ErrorReport(max(r.l2_error for r in rows), max(r.h1_seminorm_error for r in rows),
                       max(r.h1_error for r in rows), max(r.residual for r in rows), rows, fields)


def error_report(params: MlpParams, problem: ProblemSpec, n_per_axis: int = 32,
                 times: Sequence[float] = (0.0, 0.5, 1.0)) -> ErrorReport:
    if problem.time_dependent:
        return time_slice_report(params, problem, times, n_per_axis)
    l2, semi, h1, res, fr = _grid_errors(params, problem, midpoint_grid(problem, n_per_axis))
    return ErrorReport(l2, semi, h1, res, fields={None: fr})


def boundary_trace_surrogate(params: MlpParams, problem: ProblemSpec, n_per_face: int = 64,
                             t: float | None = None) -> float:
    """Surrogate for the H^{1/2} norm of the boundary trace (2D only).

    Returns sqrt(int_G u^2 + int_G |du/dtau|^2) by the midpoint rule on each
    edge; this over-estimates the fractional norm and is labelled a surrogate
    wherever it is reported.
    """
    if problem.spatial_dim != 2:
        raise UnsupportedProblemError("boundary surrogate is implemented for 2D boxes")
    (x0, y0), (x1, y1) = problem.lo, problem.hi
    total = 0.0
    for axis, fixed in ((0, x0), (0, x1), (1, y0), (1, y1)):
        other = 1 - axis
        lo, hi = problem.lo[other], problem.hi[other]
        s = lo + (np.arange(n_per_face) + 0.5) * (hi - lo) / n_per_face
        pts = np.zeros((n_per_face, 2))
        pts[:, axis] = fixed
        pts[:, other] = s
        if problem.time_dependent:
            pts = np.column_stack([pts, np.full(n_per_face, 0.0 if t is None else t)])
        b = derivatives(params, pts, problem.time_dependent)
        h = (hi - lo) / n_per_face
        total += h * float(b.value @ b.value + b.grad_x[:, other] @ b.grad_x[:, other])
    return float(np.sqrt(total))


def network_distance(p1: MlpParams, p2: MlpParams, grid: QuadratureGrid) -> tuple[float, float]:
    """(L2 distance, H1-seminorm distance) between two networks on a grid."""
    td = grid.t is not None
    b1, b2 = derivatives(p1, grid.points, td), derivatives(p2, grid.points, td)
    return (weighted_norm(b1.value - b2.value, grid.weights),
            weighted_norm(b1.grad_x - b2.grad_x, grid.weights))
