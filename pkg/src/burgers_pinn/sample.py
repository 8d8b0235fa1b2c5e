"""Collocation point sets and residual-based adaptive refinement (RAR)."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .errors import InvalidInputError
from .net import MlpParams, derivatives
from .pde import ProblemSpec, pde_residual

log = logging.getLogger(__name__)


@dataclass
class CollocationSet:
    """Interior, boundary and initial points, each an (N, point_dim) array.

    For periodic problems the boundary block holds matched pairs: the first
    half are points on low faces, the second half their images on the
    opposite high faces (same order).
    """

    interior: np.ndarray
    boundary: np.ndarray
    initial: np.ndarray

    def sizes(self) -> tuple[int, int, int]:
        return len(self.interior), len(self.boundary), len(self.initial)

    def with_interior(self, extra: np.ndarray) -> "CollocationSet":
        return replace(self, interior=np.concatenate([self.interior, extra], axis=0))


@dataclass
class RarConfig:
    pool_size: int = 100_000
    mean_residual_threshold: float = 5e-3
    add_per_round: int = 100
    max_rounds: int = 20
    seed: int = 0

    def __post_init__(self):
        if not (self.pool_size >= self.add_per_round >= 1):
            raise InvalidInputError("need pool_size >= add_per_round >= 1")
        if not self.mean_residual_threshold > 0:
            raise InvalidInputError("RAR threshold must be positive")
        if self.max_rounds < 0:
            raise InvalidInputError("max_rounds must be non-negative")


def _open_uniform(rng: np.random.Generator, lo, hi, size) -> np.ndarray:
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    x = rng.uniform(lo, hi, size=size)
    # uniform() is half-open; redraw the (practically impossible) exact lower-end hits
    hit = x <= lo
    while hit.any():
        x[hit] = rng.uniform(lo, hi, size=size)[hit]
        hit = x <= lo
    return x


def sample_interior(problem: ProblemSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    lo, hi = list(problem.lo), list(problem.hi)
    if problem.time_dependent:
        lo.append(0.0)
        hi.append(problem.T)
    return _open_uniform(rng, lo, hi, (n, len(lo)))


def _face_axes(problem: ProblemSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    # face area for axis i is the product of the other widths
    w = problem.widths
    area = np.array([np.prod(np.delete(w, i)) for i in range(problem.spatial_dim)])
    return rng.choice(problem.spatial_dim, size=n, p=area / area.sum())


def sample_boundary(problem: ProblemSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    d = problem.spatial_dim
    if problem.bc_kind == "periodic":
        if n % 2:
            raise InvalidInputError("periodic boundary sets need an even point count")
        half = n // 2
        low = sample_interior(problem, half, rng)
        axes = _face_axes(problem, half, rng)
        rows = np.arange(half)
        low[rows, axes] = np.asarray(problem.lo)[axes]
        high = low.copy()
        high[rows, axes] = np.asarray(problem.hi)[axes]
        return np.concatenate([low, high], axis=0)
    pts = sample_interior(problem, n, rng)
    axes = _face_axes(problem, n, rng)
    side = rng.integers(0, 2, size=n)
    rows = np.arange(n)
    pts[rows, axes] = np.where(side == 0, np.asarray(problem.lo)[axes], np.asarray(problem.hi)[axes])
    return pts


def sample_set(problem: ProblemSpec, n_interior: int, n_boundary: int, n_initial: int,
               seed: int) -> CollocationSet:
    """Uniform i.i.d. collocation points from a seeded generator."""
    if min(n_interior, n_boundary, n_initial) < 0:
        raise InvalidInputError("point counts must be non-negative")
    if n_interior == 0:
        raise InvalidInputError("need at least one interior point")
    if (n_initial > 0) != problem.time_dependent:
        raise InvalidInputError("n_initial must be zero exactly when the problem is stationary")
    rng = np.random.default_rng(seed)
    interior = sample_interior(problem, n_interior, rng)
    boundary = sample_boundary(problem, n_boundary, rng)
    initial = np.zeros((n_initial, problem.point_dim))
    if n_initial:
        initial[:, :problem.spatial_dim] = _open_uniform(rng, problem.lo, problem.hi,
                                                          (n_initial, problem.spatial_dim))
    return CollocationSet(interior, boundary, initial)


def pointwise_residual(params: MlpParams, problem: ProblemSpec, x: np.ndarray) -> np.ndarray:
    b = derivatives(params, x, problem.time_dependent)
    return pde_residual(b, problem.forcing(x), problem.nu, problem.time_dependent)


def mean_residual(params: MlpParams, problem: ProblemSpec, pool: np.ndarray) -> float:
    """Mean absolute PDE residual over ``pool``."""
    pool = np.atleast_2d(pool)
    if len(pool) == 0:
        raise InvalidInputError("empty residual pool")
    return float(np.mean(np.abs(pointwise_residual(params, problem, pool))))


@dataclass
class RarResult:
    points: CollocationSet
    params: MlpParams
    rounds_used: int
    final_mean_residual: float
    converged: bool
    trace: list[tuple[int, int, float]] = field(default_factory=list)


Trainer = Callable[[MlpParams, CollocationSet], MlpParams]


def rar_refine(trainer: Trainer, params: MlpParams, problem: ProblemSpec,
               points: CollocationSet, cfg: RarConfig) -> RarResult:
    """Grow the interior set with the worst-residual pool points until the mean drops.

    Each round draws a fresh pool; stops as soon as its mean absolute residual
    is below the threshold, or after ``cfg.max_rounds`` refinements.
    """
    rng = np.random.default_rng(cfg.seed)
    trace = []
    rounds = 0
    while True:
        pool = sample_interior(problem, cfg.pool_size, rng)
        res = np.abs(pointwise_residual(params, problem, pool))
        mean = float(np.mean(res))
        trace.append((rounds, len(points.interior), mean))
        log.info("RAR round %d: %d interior points, mean residual %.4e", rounds,
                 len(points.interior), mean)
        if mean < cfg.mean_residual_threshold or rounds >= cfg.max_rounds:
            return RarResult(points, params, rounds, mean,
                             mean < cfg.mean_residual_threshold, trace)
        worst = np.argsort(-res, kind="stable")[:cfg.add_per_round]
        points = points.with_interior(pool[worst])
        params = trainer(params, points)
        rounds += 1
