"""Two-sided q-Gaussian smoothed-functional gradient and Hessian estimators.

Every estimator takes plain cost values, so the same code serves analytic
objectives and simulation observations.  A single term of each estimator is
a fixed weight (depending only on the perturbation) times a cost combination:

    gradient term = eta / (beta (N+2-Nq) rho)  *  (J+ - J-)
    Hessian term  = H(eta) / (beta^2 (N+2-Nq)) *  (J+ + J-)

The weights are exposed separately because the two-timescale loop reuses
them for all inner steps of an outer iteration.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .qgaussian import Perturbation, QGaussianSpec, sample_batch

__all__ = [
    "h_matrix",
    "h_matrix_batch",
    "gradient_weight",
    "hessian_weight",
    "grad_increment",
    "hess_increment",
    "smoothed_value",
    "batch_gradient",
    "batch_hessian",
    "batch_estimates",
]


def _check_rho(r: float, strict: bool = True):
    if strict and not r > 0:
        raise ValueError(f"rho must be positive, got {r!r}")
    if r == 0:
        raise ValueError("rho is zero: perturbation lies on the support boundary")


def h_matrix(spec: QGaussianSpec, pert: Perturbation) -> np.ndarray:
    """Weight matrix turning summed two-sided costs into a Hessian sample."""
    _check_rho(pert.rho)
    eta = np.asarray(pert.eta, dtype=float)
    if spec.is_gaussian:
        h = np.outer(eta, eta)
        h[np.diag_indices_from(h)] -= 1.0
        return h
    r = pert.rho
    h = (2.0 * spec.q / spec.rho_scale) * np.outer(eta, eta) / (r * r)
    h[np.diag_indices_from(h)] -= 1.0 / r
    return h


def h_matrix_batch(spec: QGaussianSpec, eta: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """Vectorised :func:`h_matrix` over a stack of perturbations, shape ``(L, N, N)``."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0):
        raise ValueError("rho must be positive for every perturbation")
    outer = eta[:, :, None] * eta[:, None, :]
    if spec.is_gaussian:
        h = outer
    else:
        h = (2.0 * spec.q / spec.rho_scale) * outer / (rho * rho)[:, None, None]
    idx = np.arange(spec.dim)
    h[:, idx, idx] -= (1.0 / rho)[:, None]
    return h


def gradient_weight(spec: QGaussianSpec, pert: Perturbation) -> np.ndarray:
    _check_rho(pert.rho, strict=False)
    return np.asarray(pert.eta, dtype=float) / (spec.beta * spec.rho_scale * pert.rho)


def hessian_weight(spec: QGaussianSpec, pert: Perturbation) -> np.ndarray:
    return h_matrix(spec, pert) / (spec.beta * spec.beta * spec.rho_scale)


def grad_increment(
    spec: QGaussianSpec, pert: Perturbation, cost_plus: float, cost_minus: float
) -> np.ndarray:
    return gradient_weight(spec, pert) * (cost_plus - cost_minus)


def hess_increment(
    spec: QGaussianSpec, pert: Perturbation, cost_plus: float, cost_minus: float
) -> np.ndarray:
    return hessian_weight(spec, pert) * (cost_plus + cost_minus)


def _evaluate(objective, points: np.ndarray, vectorized: bool) -> np.ndarray:
    if vectorized:
        return np.asarray(objective(points), dtype=float).reshape(len(points))
    return np.fromiter((objective(p) for p in points), dtype=float, count=len(points))


def _two_sided_costs(objective, spec, theta, eta, vectorized):
    theta = np.asarray(theta, dtype=float)
    plus = _evaluate(objective, theta + spec.beta * eta, vectorized)
    minus = _evaluate(objective, theta - spec.beta * eta, vectorized)
    return plus, minus


def smoothed_value(
    objective: Callable,
    spec: QGaussianSpec,
    theta,
    num_samples: int,
    rng: np.random.Generator,
    vectorized: bool = False,
) -> float:
    """Monte-Carlo estimate of ``E[(J(theta + beta eta) + J(theta - beta eta)) / 2]``."""
    if num_samples < 1:
        raise ValueError("num_samples must be at least 1")
    eta, _ = sample_batch(spec, rng, num_samples)
    plus, minus = _two_sided_costs(objective, spec, theta, eta, vectorized)
    return float(np.mean(0.5 * (plus + minus)))


def batch_estimates(
    objective: Callable,
    spec: QGaussianSpec,
    theta,
    L: int,
    rng: np.random.Generator,
    vectorized: bool = False,
    hessian: bool = True,
    return_terms: bool = False,
):
    """Gradient and Hessian estimates averaged over ``L`` fresh perturbations.

    With ``vectorized=True`` the objective receives an ``(L, N)`` array and must
    return ``L`` costs.  ``return_terms=True`` additionally returns the
    per-sample terms, which is what standard-error computations need.
    """
    if L < 1:
        raise ValueError("L must be at least 1")
    eta, rho = sample_batch(spec, rng, L)
    if spec.q < 1.0 and np.any(rho == 0):
        raise ValueError("perturbation on the support boundary")
    plus, minus = _two_sided_costs(objective, spec, theta, eta, vectorized)
    g_terms = eta * ((plus - minus) / (spec.beta * spec.rho_scale * rho))[:, None]
    grad = g_terms.mean(axis=0)
    if not hessian:
        return (grad, None, g_terms, None) if return_terms else (grad, None)
    weight = (plus + minus) / (spec.beta**2 * spec.rho_scale)
    if return_terms:
        h_terms = h_matrix_batch(spec, eta, rho) * weight[:, None, None]
        return grad, h_terms.mean(axis=0), g_terms, h_terms
    # avoid materialising L x N x N terms
    if np.any(rho <= 0):
        raise ValueError("rho must be positive for every perturbation")
    if spec.is_gaussian:
        coef = weight
    else:
        coef = weight * (2.0 * spec.q / spec.rho_scale) / (rho * rho)
    hess = np.einsum("l,li,lj->ij", coef, eta, eta) / L
    hess[np.diag_indices(spec.dim)] -= np.sum(weight / rho) / L
    return grad, hess


def batch_gradient(objective, spec, theta, L, rng, vectorized=False) -> np.ndarray:
    return batch_estimates(objective, spec, theta, L, rng, vectorized, hessian=False)[0]


def batch_hessian(objective, spec, theta, L, rng, vectorized=False) -> np.ndarray:
    return batch_estimates(objective, spec, theta, L, rng, vectorized)[1]
