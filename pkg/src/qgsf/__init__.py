"""Newton and gradient stochastic optimisation with q-Gaussian smoothed functionals."""

from ._backend import BACKEND
from .environments import AnalyticSystem, Quadratic, QueueNetwork, QueueNetworkConfig
from .estimators import (
    batch_gradient,
    batch_hessian,
    grad_increment,
    h_matrix,
    hess_increment,
    smoothed_value,
)
from .projections import BoxConstraint, PdProjectionPolicy, project_box, project_pd
from .qgaussian import Perturbation, QGaussianSpec, sample, sample_batch
from .two_timescale import Algorithm, OptimizerConfig, Trajectory, run

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "AnalyticSystem",
    "Quadratic",
    "QueueNetwork",
    "QueueNetworkConfig",
    "batch_gradient",
    "batch_hessian",
    "grad_increment",
    "h_matrix",
    "hess_increment",
    "smoothed_value",
    "BoxConstraint",
    "PdProjectionPolicy",
    "project_box",
    "project_pd",
    "Perturbation",
    "QGaussianSpec",
    "sample",
    "sample_batch",
    "Algorithm",
    "OptimizerConfig",
    "Trajectory",
    "run",
]
