"""Two-timescale projected stochastic approximation with q-Gaussian SF estimates.

``nqsf2`` is the Newton variant: gradient and Hessian estimates are tracked
on fast step sizes, the Hessian is projected to be positive definite once per
outer iteration, and the parameter takes a projected Newton step on the slow
step size.  ``gqsf2`` is the gradient-only counterpart.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import _backend
from .environments import SimSystem, observe_costs
from .estimators import gradient_weight, hessian_weight
from .projections import (
    BoxConstraint,
    PdProjectionPolicy,
    newton_direction,
    project_box,
    project_pd,
)
from .qgaussian import QGaussianSpec, sample

__all__ = [
    "Algorithm",
    "StepSchedule",
    "step_size",
    "OptimizerConfig",
    "EstimatorState",
    "Trajectory",
    "DivergenceError",
    "fast_update",
    "distance_to_target",
    "run",
]

log = logging.getLogger(__name__)


class Algorithm(str, Enum):
    NQSF2 = "nqsf2"
    GQSF2 = "gqsf2"


class DivergenceError(FloatingPointError):
    """An iterate became non-finite."""


@dataclass(frozen=True)
class StepSchedule:
    """``scale / (n + 1) ** exponent``.

    ``scale`` defaults to 1; zero freezes whatever the schedule drives.
    """

    exponent: float
    scale: float = 1.0

    def __post_init__(self):
        if not 0.5 < self.exponent <= 1.0:
            raise ValueError(f"exponent must lie in (0.5, 1], got {self.exponent!r}")
        if not 0.0 <= self.scale <= 1.0:
            raise ValueError(f"scale must lie in [0, 1], got {self.scale!r}")

    def __call__(self, n: int) -> float:
        return step_size(self, n)


def step_size(schedule: StepSchedule, n: int) -> float:
    if n < 0:
        raise ValueError("n must be non-negative")
    return schedule.scale / (n + 1) ** schedule.exponent


@dataclass(frozen=True)
class OptimizerConfig:
    algorithm: Algorithm
    spec: QGaussianSpec
    box: BoxConstraint
    pd_policy: PdProjectionPolicy = field(default_factory=PdProjectionPolicy)
    a_exponent: float = 1.0
    b_exponent: float = 0.85
    c_exponent: float = 0.65
    outer_iterations: int = 5000
    inner_iterations: int = 100
    seed: int = 0
    a_scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "algorithm", Algorithm(self.algorithm))
        for name in ("a_exponent", "b_exponent", "c_exponent"):
            StepSchedule(getattr(self, name))
        if self.outer_iterations < 0:
            raise ValueError("outer_iterations must be non-negative")
        if self.inner_iterations < 1:
            raise ValueError("inner_iterations must be at least 1")
        if self.box.dim != self.spec.dim:
            raise ValueError("box dimension does not match the perturbation dimension")
        if self.algorithm is Algorithm.NQSF2 and not self.spec.q > 0:
            raise ValueError(f"nqsf2 requires q > 0, got {self.spec.q}")

    @property
    def a(self) -> StepSchedule:
        return StepSchedule(self.a_exponent, self.a_scale)

    @property
    def b(self) -> StepSchedule:
        return StepSchedule(self.b_exponent)

    @property
    def c(self) -> StepSchedule:
        return StepSchedule(self.c_exponent)


@dataclass(frozen=True)
class EstimatorState:
    z: np.ndarray
    w: np.ndarray

    @classmethod
    def zeros(cls, dim: int) -> "EstimatorState":
        return cls(np.zeros(dim), np.zeros((dim, dim)))


def fast_update(state: EstimatorState, b_n: float, c_n: float, g_inc, h_inc) -> EstimatorState:
    """One averaging step on the fast timescale; positive-definite projection is
    applied separately, once per outer iteration."""
    if not (0 < b_n <= 1 and 0 < c_n <= 1):
        raise ValueError("step sizes must lie in (0, 1]")
    g_inc = np.asarray(g_inc, dtype=float)
    h_inc = np.asarray(h_inc, dtype=float)
    if not (np.all(np.isfinite(g_inc)) and np.all(np.isfinite(h_inc))):
        raise ValueError("non-finite increment")
    return EstimatorState(
        z=(1.0 - b_n) * state.z + b_n * g_inc,
        w=(1.0 - c_n) * state.w + c_n * h_inc,
    )


def distance_to_target(theta, target) -> float:
    theta = np.asarray(theta, dtype=float)
    target = np.asarray(target, dtype=float)
    if theta.shape != target.shape:
        raise ValueError("theta and target must have equal length")
    return float(np.linalg.norm(theta - target))


@dataclass
class Trajectory:
    """Per-outer-iteration record; row ``n`` holds the state after ``n`` updates."""

    theta: np.ndarray  # (M+1, N)
    z_norm: np.ndarray
    w_norm: np.ndarray
    z_sup: np.ndarray  # max |Z_i|
    w_sup: np.ndarray  # max |W_ij| before projection
    target: np.ndarray | None = None
    final_state: EstimatorState | None = None

    @property
    def n(self) -> np.ndarray:
        return np.arange(self.theta.shape[0])

    @property
    def final_theta(self) -> np.ndarray:
        return self.theta[-1]

    @property
    def distance(self) -> np.ndarray | None:
        if self.target is None:
            return None
        return np.linalg.norm(self.theta - self.target, axis=1)

    @property
    def final_distance(self) -> float:
        d = self.distance
        if d is None:
            raise ValueError("trajectory has no target")
        return float(d[-1])


def run(
    config: OptimizerConfig,
    system: SimSystem,
    initial_theta,
    target=None,
) -> Trajectory:
    """Run ``config.outer_iterations`` projected updates and record the path.

    Randomness is derived from ``config.seed``: one stream for perturbations
    and one each for the ``+`` and ``-`` replicas.
    """
    spec, box, policy = config.spec, config.box, config.pd_policy
    newton = config.algorithm is Algorithm.NQSF2
    theta = np.asarray(initial_theta, dtype=float).copy()
    if theta.shape != (spec.dim,):
        raise ValueError(f"initial_theta must have length {spec.dim}")
    if not box.contains(theta):
        raise ValueError("initial_theta must lie in the box")

    pert_seed, plus_seed, minus_seed = np.random.SeedSequence(config.seed).spawn(3)
    pert_rng = np.random.default_rng(pert_seed)
    replica_plus = system.create_replica(plus_seed)
    replica_minus = system.create_replica(minus_seed)

    M, L = config.outer_iterations, config.inner_iterations
    a_sched, b_sched, c_sched = config.a, config.b, config.c
    z = np.zeros(spec.dim)
    w = np.zeros((spec.dim, spec.dim))
    thetas = np.empty((M + 1, spec.dim))
    z_norm = np.zeros(M + 1)
    w_norm = np.zeros(M + 1)
    z_sup = np.zeros(M + 1)
    w_sup = np.zeros(M + 1)
    thetas[0] = theta

    for n in range(M):
        pert = sample(spec, pert_rng)
        step = spec.beta * pert.eta
        cost_plus = observe_costs(replica_plus, project_box(box, theta + step), L)
        cost_minus = observe_costs(replica_minus, project_box(box, theta - step), L)
        gw = gradient_weight(spec, pert)
        hw = hessian_weight(spec, pert) if newton else w
        _backend.fast_recursion(
            z, w, b_sched(n), c_sched(n), gw, hw, cost_plus, cost_minus, newton
        )
        z_sup[n + 1] = np.max(np.abs(z))
        if newton:
            w_sup[n + 1] = np.max(np.abs(w))
            if not np.all(np.isfinite(w)):
                raise DivergenceError(f"Hessian estimate became non-finite at n={n}")
            w = np.ascontiguousarray(project_pd(policy, w))
            direction = newton_direction(policy, w, z)
        else:
            direction = z
        theta = project_box(box, theta - a_sched(n) * direction)
        if not (np.all(np.isfinite(z)) and np.all(np.isfinite(theta))):
            raise DivergenceError(
                f"non-finite iterate at n={n}: |Z|={np.linalg.norm(z)}, theta={theta}"
            )
        thetas[n + 1] = theta
        z_norm[n + 1] = np.linalg.norm(z)
        w_norm[n + 1] = np.linalg.norm(w)

    return Trajectory(
        theta=thetas,
        z_norm=z_norm,
        w_norm=w_norm,
        z_sup=z_sup,
        w_sup=w_sup,
        target=None if target is None else np.asarray(target, dtype=float),
        final_state=EstimatorState(z.copy(), w.copy()),
    )
