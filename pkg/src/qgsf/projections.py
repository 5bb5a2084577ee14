"""Box projection, positive-definite projection and the Newton solve."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "BoxConstraint",
    "PdVariant",
    "PdProjectionPolicy",
    "project_box",
    "project_pd",
    "newton_direction",
]

# reassembled spectra land within a few ulps of the floor
_FLOOR_RTOL = 1e-9


@dataclass(frozen=True)
class BoxConstraint:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float).ravel()
        hi = np.asarray(self.upper, dtype=float).ravel()
        if lo.shape != hi.shape:
            raise ValueError("lower and upper must have the same length")
        if not np.all(lo < hi):
            raise ValueError("box requires lower < upper componentwise")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def uniform(cls, lower: float, upper: float, dim: int) -> "BoxConstraint":
        return cls(np.full(dim, float(lower)), np.full(dim, float(upper)))

    @property
    def dim(self) -> int:
        return self.lower.size

    def contains(self, theta) -> bool:
        theta = np.asarray(theta, dtype=float)
        return bool(np.all(theta >= self.lower) and np.all(theta <= self.upper))


class PdVariant(str, Enum):
    JACOBI = "jacobi"
    FULL_SPECTRAL = "full_spectral"


@dataclass(frozen=True)
class PdProjectionPolicy:
    variant: PdVariant = PdVariant.JACOBI
    epsilon: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "variant", PdVariant(self.variant))
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon!r}")


def project_box(c: BoxConstraint, theta) -> np.ndarray:
    return np.clip(np.asarray(theta, dtype=float), c.lower, c.upper)


def project_pd(policy: PdProjectionPolicy, w) -> np.ndarray:
    """Map ``w`` to a symmetric matrix with every eigenvalue at least epsilon.

    The Jacobi variant keeps only the diagonal.  The full-spectral variant
    symmetrises, clamps the spectrum from below and reassembles; a matrix
    that already satisfies the floor is returned unchanged, which keeps the
    map exactly idempotent.
    """
    w = np.asarray(w, dtype=float)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {w.shape}")
    if not np.all(np.isfinite(w)):
        raise ValueError("matrix has non-finite entries")
    eps = policy.epsilon
    if policy.variant is PdVariant.JACOBI:
        return np.diag(np.maximum(np.diag(w), eps))
    sym = 0.5 * (w + w.T)
    vals, vecs = np.linalg.eigh(sym)
    if vals[0] >= eps * (1.0 - _FLOOR_RTOL):
        return sym
    out = (vecs * np.maximum(vals, eps)) @ vecs.T
    return 0.5 * (out + out.T)


def newton_direction(policy: PdProjectionPolicy, w_projected, z) -> np.ndarray:
    """Solve ``w_projected @ d = z`` for a matrix produced by :func:`project_pd`."""
    w = np.asarray(w_projected, dtype=float)
    z = np.asarray(z, dtype=float)
    eps = policy.epsilon
    if policy.variant is PdVariant.JACOBI:
        diag = np.diag(w)
        if np.any(diag < eps) or np.any(w != np.diag(diag)):
            raise ValueError("matrix is not a Jacobi projection with diagonal >= epsilon")
        return z / diag
    if np.linalg.eigvalsh(0.5 * (w + w.T))[0] < eps * (1.0 - _FLOOR_RTOL):
        raise ValueError("matrix violates the eigenvalue floor")
    return np.linalg.solve(w, z)
