"""Logarithmic barrier potential of the scaling problem in log coordinates.

With ``phi = (ln x, ln y)`` the potential is

    g(phi) = sum_ij x_i A_ij y_j - sum_i r_i ln x_i - sum_j c_j ln y_j

whose stationary points are exactly the matrix-scaling solutions.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NotStationary
from .model import ScalingProblem

STATIONARY_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class PotentialPoint:
    phi: np.ndarray
    n_rows: int

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=float).ravel()
        if not np.isfinite(phi).all():
            raise ValueError("potentials must be finite")
        object.__setattr__(self, "phi", phi)

    @classmethod
    def from_scaling(cls, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return cls(np.concatenate([np.log(x), np.log(y)]), x.size)

    @property
    def x(self):
        return np.exp(self.phi[: self.n_rows])

    @property
    def y(self):
        return np.exp(self.phi[self.n_rows :])

    def rescaled(self, alpha):
        """The symmetry-related point ``(x / alpha, y * alpha)``."""
        shift = np.log(alpha)
        phi = self.phi.copy()
        phi[: self.n_rows] -= shift
        phi[self.n_rows :] += shift
        return PotentialPoint(phi, self.n_rows)


@dataclass(frozen=True)
class StabilityReport:
    gradient_norm: float
    min_eigenvalue: float
    null_direction_residual: float
    diagonally_dominant: bool
    stationary: bool


def _split(problem, point):
    n, m = problem.shape
    if point.n_rows != n or point.phi.size != n + m:
        raise DimensionMismatch(f"point of size {point.phi.size} does not fit a {n}x{m} problem")
    return point.x, point.y


def barrier_value(problem: ScalingProblem, point: PotentialPoint) -> float:
    x, y = _split(problem, point)
    n = problem.shape[0]
    return float(
        x @ problem.matrix @ y
        - problem.row_targets @ point.phi[:n]
        - problem.col_targets @ point.phi[n:]
    )


def barrier_gradient(problem: ScalingProblem, point: PotentialPoint) -> np.ndarray:
    """Gradient in log coordinates: row and column marginal defects of ``diag(x) A diag(y)``."""
    x, y = _split(problem, point)
    a = problem.matrix
    return np.concatenate([x * (a @ y) - problem.row_targets, y * (a.T @ x) - problem.col_targets])


def _hessian(problem, point):
    x, y = _split(problem, point)
    n, m = problem.shape
    b = x[:, None] * problem.matrix * y[None, :]
    h = np.zeros((n + m, n + m))
    # Exact second derivative; the diagonal equals the targets d = (r, c) at stationarity.
    h[np.arange(n), np.arange(n)] = b.sum(axis=1)
    h[n + np.arange(m), n + np.arange(m)] = b.sum(axis=0)
    h[:n, n:] = b
    h[n:, :n] = b.T
    return h


def barrier_hessian(problem: ScalingProblem, point: PotentialPoint) -> np.ndarray:
    """Hessian of the barrier in log coordinates.

    Off-diagonal blocks hold ``x_i A_ij y_j``; diagonal entries hold the
    current row and column sums of that scaled matrix, which coincide with
    ``(r, c)`` at a stationary point.  A :class:`NotStationary` warning is
    issued when the gradient exceeds ``1e-8`` in the max norm.
    """
    grad = barrier_gradient(problem, point)
    if np.max(np.abs(grad)) > STATIONARY_TOL:
        warnings.warn(
            f"Hessian evaluated away from stationarity (|grad|_inf={np.max(np.abs(grad)):.3g})",
            NotStationary,
            stacklevel=2,
        )
    return _hessian(problem, point)


def stability_report(problem: ScalingProblem, point: PotentialPoint) -> StabilityReport:
    grad = barrier_gradient(problem, point)
    gnorm = float(np.max(np.abs(grad)))
    stationary = gnorm <= STATIONARY_TOL
    if not stationary:
        warnings.warn(f"point is not stationary (|grad|_inf={gnorm:.3g})", NotStationary, stacklevel=2)
    h = _hessian(problem, point)
    n, m = problem.shape
    w = np.concatenate([np.ones(n), -np.ones(m)])
    diag = np.abs(np.diag(h))
    off = np.abs(h).sum(axis=1) - diag
    scale = max(1.0, float(np.max(diag)))
    return StabilityReport(
        gradient_norm=gnorm,
        min_eigenvalue=float(np.linalg.eigvalsh(h)[0]),
        null_direction_residual=float(np.max(np.abs(h @ w))),
        diagonally_dominant=bool(np.all(diag >= off - 1e-12 * scale)),
        stationary=stationary,
    )
