"""Sinkhorn-Knopp matrix scaling in linear and log-domain arithmetic."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import DivisionByZero, NonPositiveInput
from .model import ScalingProblem, transport_support

SCHEDULES = ("gauss-seidel", "jacobi")


@dataclass(frozen=True, eq=False)
class ScalingSolution:
    """Scaling vectors with convergence metadata.

    ``log_u``/``log_v`` are always populated; in log-domain runs they are the
    primary state and ``u``/``v`` may over- or underflow.
    """

    u: np.ndarray
    v: np.ndarray
    iterations: int
    converged: bool
    marginal_residual: float
    total_support_suspect: bool = False
    log_domain: bool = False
    row_labels: tuple = ()
    col_labels: tuple = ()
    log_u: np.ndarray = None
    log_v: np.ndarray = None

    def __post_init__(self):
        with np.errstate(divide="ignore"):
            if self.log_u is None:
                object.__setattr__(self, "log_u", np.log(self.u))
            if self.log_v is None:
                object.__setattr__(self, "log_v", np.log(self.v))


def _marginal_residual(b, r, c):
    return float(
        max(
            np.max(np.abs(b.sum(axis=1) - r) / r),
            np.max(np.abs(b.sum(axis=0) - c) / c),
        )
    )


def scaled_matrix(problem: ScalingProblem, u, v):
    """Return ``B = diag(u) A diag(v)`` and its relative marginal residual."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    b = u[:, None] * problem.matrix * v[None, :]
    return b, _marginal_residual(b, problem.row_targets, problem.col_targets)


def sk_step(problem: ScalingProblem, u, v, schedule="gauss-seidel"):
    """One Sinkhorn-Knopp sweep: rows first, then columns.

    Under ``gauss-seidel`` (default) the column update sees the new ``u``.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if (u <= 0).any() or (v <= 0).any():
        raise NonPositiveInput("u and v must be strictly positive")
    a = problem.matrix
    row_sums = a @ v
    if (row_sums == 0).any():
        raise DivisionByZero(f"rows {np.nonzero(row_sums == 0)[0].tolist()} have no support")
    u_new = problem.row_targets / row_sums
    col_sums = a.T @ (u_new if schedule == "gauss-seidel" else u)
    if (col_sums == 0).any():
        raise DivisionByZero(f"columns {np.nonzero(col_sums == 0)[0].tolist()} have no support")
    return u_new, problem.col_targets / col_sums


def _log_step(log_a, log_r, log_c, a_log, b_log, schedule):
    a_new = log_r - logsumexp(log_a + b_log[None, :], axis=1)
    b_new = log_c - logsumexp(log_a + (a_new if schedule == "gauss-seidel" else a_log)[:, None], axis=0)
    return a_new, b_new


def sk_solve(
    problem: ScalingProblem,
    tolerance=1e-13,
    max_iterations=100_000,
    log_domain=False,
    schedule="gauss-seidel",
    stall_ratio=0.1,
    stall_windows=3,
    max_dynamic_range=1e12,
) -> ScalingSolution:
    """Scale ``problem.matrix`` to its target marginals starting from ``u = v = 1``.

    Stops when the relative marginal residual drops below ``tolerance``.
    The residual is sampled at doubling checkpoints; if it shrinks by less
    than ``stall_ratio`` per window for ``stall_windows`` windows the problem
    is checked for total support and, when that fails (or the scaling
    vectors span more than ``max_dynamic_range``), the run stops early with
    ``total_support_suspect=True``.
    """
    if schedule not in SCHEDULES:
        raise ValueError(f"schedule must be one of {SCHEDULES}")
    a = problem.matrix
    r, c = problem.row_targets, problem.col_targets
    if not (a > 0).any(axis=1).all() or not (a > 0).any(axis=0).all():
        raise DivisionByZero("matrix has an all-zero row or column")
    n, m = a.shape
    log_u = np.zeros(n)
    log_v = np.zeros(m)
    u, v = np.ones(n), np.ones(m)
    if log_domain:
        with np.errstate(divide="ignore"):
            log_a = np.log(a)
        log_r, log_c = np.log(r), np.log(c)

    checkpoint = 16
    last_checkpoint_residual = None
    stalls = 0
    support_checked = False
    suspect = False
    converged = False
    residual = math.inf
    it = 0

    # under jacobi, u and v of one iteration belong to different chains;
    # the new u pairs with the previous v
    jacobi = schedule == "jacobi"
    for it in range(1, max_iterations + 1):
        if log_domain:
            prev = log_v
            log_u, log_v = _log_step(log_a, log_r, log_c, log_u, log_v, schedule)
            pair = (log_u, prev if jacobi else log_v)
            b = np.exp(pair[0][:, None] + log_a + pair[1][None, :])
            residual = _marginal_residual(b, r, c)
        else:
            prev = v
            u, v = sk_step(problem, u, v, schedule)
            pair = (u, prev if jacobi else v)
            _, residual = scaled_matrix(problem, *pair)
        if residual < tolerance:
            converged = True
            break
        if it == checkpoint:
            checkpoint *= 2
            if last_checkpoint_residual is not None and residual > stall_ratio * last_checkpoint_residual:
                stalls += 1
            else:
                stalls = 0
            last_checkpoint_residual = residual
            if stalls >= stall_windows:
                if log_domain:
                    lu, lv = pair
                else:
                    with np.errstate(divide="ignore"):
                        lu, lv = np.log(pair[0]), np.log(pair[1])
                spread = max(np.ptp(lu), np.ptp(lv))
                if spread > math.log(max_dynamic_range):
                    suspect = True
                elif not support_checked:
                    support_checked = True
                    suspect = not transport_support(a, r, c)[1]
                if suspect:
                    break

    if log_domain:
        log_u, log_v = pair
        u, v = np.exp(log_u), np.exp(log_v)
    else:
        u, v = pair
    return ScalingSolution(
        u=u,
        v=v,
        iterations=it,
        converged=converged,
        marginal_residual=residual,
        total_support_suspect=suspect,
        log_domain=log_domain,
        row_labels=problem.row_labels,
        col_labels=problem.col_labels,
        log_u=log_u if log_domain else None,
        log_v=log_v if log_domain else None,
    )
