"""Physics-informed network solver for the viscous Burgers equation on boxes."""

from .errors import (InvalidArchitectureError, InvalidInputError, NumericalFailureError,
                     PinnError, UnsupportedProblemError)
from .metrics import ErrorReport, error_report, h1_error, l2_error, midpoint_grid, residual_norm
from .net import DerivativeBundle, MlpParams, derivatives, forward, init_network, loss_gradient
from .optim import AdamState, LbfgsState, adam_step, lbfgs_minimize, train_pipeline
from .pde import ProblemSpec, composite_loss, get_problem, pde_residual
from .sample import CollocationSet, RarConfig, rar_refine, sample_set

__all__ = [
    "AdamState", "CollocationSet", "DerivativeBundle", "ErrorReport", "InvalidArchitectureError",
    "InvalidInputError", "LbfgsState", "MlpParams", "NumericalFailureError", "PinnError",
    "ProblemSpec", "RarConfig", "UnsupportedProblemError", "adam_step", "composite_loss",
    "derivatives", "error_report", "forward", "get_problem", "h1_error", "init_network",
    "l2_error", "lbfgs_minimize", "loss_gradient", "midpoint_grid", "pde_residual", "rar_refine",
    "residual_norm", "sample_set", "train_pipeline",
]
