"""Fitness-Complexity iteration with mean normalization.

Two update schedules are supported.  ``jacobi`` is the classic form where both
vectors are computed from the previous iterate; it produces two interleaved
chains (even and odd iterations).  ``gauss-seidel`` computes complexity from
the freshly updated fitness, like the Sinkhorn-Knopp update.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import NonPositiveInput
from .model import BipartiteMatrix, FCResult, require_nonempty
from .ranking import tie_groups

SCHEDULES = ("jacobi", "gauss-seidel")


@dataclass(frozen=True)
class FCOptions:
    """Solver controls.

    ``zero_slope`` drives the zero-limit detector: an entry whose log-fitness
    keeps falling at least as fast as ``n**-zero_slope`` over ``zero_windows``
    consecutive doubling windows is declared to vanish in the limit.
    """

    schedule: str = "jacobi"
    max_iterations: int = 100_000
    value_tolerance: float = 1e-13
    rank_window: int = 10
    zero_floor: float = 1e-30
    zero_slope: float = 0.25
    zero_windows: int = 3

    def __post_init__(self):
        if self.schedule not in SCHEDULES:
            raise ValueError(f"schedule must be one of {SCHEDULES}")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not (self.value_tolerance > 0 and self.zero_floor > 0 and self.rank_window >= 1):
            raise ValueError("tolerances must be positive")

    @property
    def lag(self):
        return 2 if self.schedule == "jacobi" else 1


def _check_positive(F, Q):
    F = np.asarray(F, dtype=float)
    Q = np.asarray(Q, dtype=float)
    if (F <= 0).any() or (Q <= 0).any() or not (np.isfinite(F).all() and np.isfinite(Q).all()):
        raise NonPositiveInput("fitness and complexity must be strictly positive and finite")
    return F, Q


def _complexity_from(m, F):
    """Harmonic update; products exported by a zero-fitness country get zero."""
    alive = F > 0
    inv = np.zeros_like(F)
    inv[alive] = 1.0 / F[alive]
    with np.errstate(divide="ignore"):
        q = 1.0 / (m.T @ inv)
    dead = (m[~alive].sum(axis=0) > 0) if (~alive).any() else np.zeros(m.shape[1], bool)
    q[dead] = 0.0
    return q


def _advance(m, F, Q, schedule):
    f_new = m @ Q
    f_new = f_new / f_new.mean()
    q_new = _complexity_from(m, f_new if schedule == "gauss-seidel" else F)
    return f_new, q_new / q_new.mean()


def fc_step(matrix: BipartiteMatrix, F, Q, schedule="jacobi"):
    """One normalized Fitness-Complexity update; returns ``(F', Q')``."""
    if schedule not in SCHEDULES:
        raise ValueError(f"schedule must be one of {SCHEDULES}")
    F, Q = _check_positive(F, Q)
    m = matrix.as_float()
    if F.shape != (m.shape[0],) or Q.shape != (m.shape[1],):
        raise ValueError("F and Q must match the matrix dimensions")
    return _advance(m, F, Q, schedule)


def _relative_defect(m, F, Q):
    f_new, q_new = _advance(m, F, Q, "jacobi")
    f0 = F / F.mean()
    q0 = Q / Q.mean()
    fm, qm = f0 > 0, q0 > 0
    gaps = [0.0]
    if fm.any():
        gaps.append(np.max(np.abs(f_new[fm] - f0[fm]) / f0[fm]))
    if qm.any():
        gaps.append(np.max(np.abs(q_new[qm] - q0[qm]) / q0[qm]))
    return float(max(gaps))


def fc_residual(matrix: BipartiteMatrix, F, Q):
    """Largest relative change of F or Q under one normalized step from ``(F, Q)``.

    Zero exactly at a normalized fixed point.  Inputs need not be normalized.
    """
    F, Q = _check_positive(F, Q)
    return _relative_defect(matrix.as_float(), F, Q)


def fc_solve(matrix: BipartiteMatrix, options: FCOptions | None = None) -> FCResult:
    """Iterate :func:`fc_step` from uniform scores until values and ranks settle.

    Convergence needs both the lagged log-value test (lag 2 under ``jacobi``,
    1 under ``gauss-seidel``) on entries above ``zero_floor`` and unchanged
    F and Q rankings for ``rank_window`` iterations.  Countries whose fitness
    falls under ``zero_floor``, or decays algebraically towards it, are pinned
    to zero and listed in ``zero_limit_rows``.  A non-converged result is
    returned with ``converged=False`` rather than raised.
    """
    options = options or FCOptions()
    require_nonempty(matrix)
    m = matrix.as_float()
    n_rows, n_cols = m.shape
    F = np.ones(n_rows)
    Q = np.ones(n_cols)
    lag = options.lag
    history = deque([(F.copy(), Q.copy())], maxlen=lag + 1)
    zero_rows = np.zeros(n_rows, dtype=bool)
    rank_history = deque(maxlen=lag + 1)
    stable = 0
    checkpoint = 16
    checkpoint_logs = {}
    slope_hits = np.zeros(n_rows, dtype=int)
    # detection event index and pre-clamp value of every vanishing entry
    row_stage = np.full(n_rows, -1)
    col_stage = np.full(n_cols, -1)
    row_last = np.zeros(n_rows)
    col_last = np.zeros(n_cols)
    events = 0
    converged = False
    it = 0

    for it in range(1, options.max_iterations + 1):
        F, Q = _advance(m, F, Q, options.schedule)

        newly = (F < options.zero_floor) & ~zero_rows
        if it == checkpoint:
            with np.errstate(divide="ignore", invalid="ignore"):
                logs = np.log(F)
            prev = checkpoint_logs.get(checkpoint // 2)
            if prev is not None:
                with np.errstate(invalid="ignore"):
                    slope = (logs - prev) / math.log(2.0)
                falling = slope <= -options.zero_slope
                slope_hits = np.where(falling, slope_hits + 1, 0)
                newly |= (slope_hits >= options.zero_windows) & ~zero_rows
            checkpoint_logs = {checkpoint: logs}
            checkpoint *= 2
        if newly.any():
            row_stage[newly] = events
            row_last[newly] = F[newly]
            zero_rows |= newly
            F = np.where(zero_rows, 0.0, F)
            F = F / F.mean()
            Q_before = Q
            Q = _complexity_from(m, F)
            Q = Q / Q.mean()
            dead = (Q == 0) & (col_stage < 0)
            col_stage[dead] = events
            col_last[dead] = Q_before[dead]
            events += 1
            history.clear()
            rank_history.clear()
            stable = 0

        history.append((F.copy(), Q.copy()))
        # ranks are compared within one parity chain, like the values
        ranks = (tuple(tie_groups(F)), tuple(tie_groups(Q)))
        rank_history.append(ranks)
        same = len(rank_history) == lag + 1 and rank_history[0] == ranks
        stable = stable + 1 if same else 0

        if len(history) == lag + 1 and stable >= options.rank_window:
            F_old, Q_old = history[0]
            if _log_gap(F, F_old, options.zero_floor) < options.value_tolerance and _log_gap(
                Q, Q_old, options.zero_floor
            ) < options.value_tolerance:
                converged = True
                if lag > 1:
                    F, Q = _pick_chain(m, it, history, options)
                break

    return FCResult(
        fitness=F,
        complexity=Q,
        iterations=it,
        converged=converged,
        residual=_relative_defect(m, F, Q),
        zero_limit_rows=tuple(int(i) for i in np.nonzero(zero_rows)[0]),
        row_labels=matrix.row_labels,
        col_labels=matrix.col_labels,
        schedule=options.schedule,
        fitness_order=_order_keys(F, row_stage, row_last),
        complexity_order=_order_keys(Q, col_stage, col_last),
    )


def _pick_chain(m, it, history, options):
    """Under jacobi the even and odd chains can settle apart (decomposable
    matrices keep a free scale per block).  Then return the fixed point of
    the chain that starts from the uniform complexity, which is the one the
    gauss-seidel schedule follows, with Q recomputed from F."""
    F, Q = history[-1]
    F_prev, Q_prev = history[-2]
    floor = options.zero_floor
    if _log_gap(F, F_prev, floor) < options.value_tolerance and _log_gap(Q, Q_prev, floor) < options.value_tolerance:
        return F, Q
    F = F if it % 2 == 1 else F_prev
    Q = _complexity_from(m, F)
    return F, Q / Q.mean()


def _order_keys(values, stage, last):
    """Positive ranking keys: survivors keep their value, vanished entries sit below.

    Vanished entries are ordered by detection event, then by the value they
    had when detected; near-ties stay tied.
    """
    gone = stage >= 0
    if not gone.any():
        return values.copy()
    alive = values > 0
    ceiling = float(values[alive].min()) if alive.any() else 1.0
    groups = tie_groups(last[gone])
    composite = list(zip(stage[gone].tolist(), groups.tolist()))
    distinct = sorted(set(composite))
    rank = {key: k for k, key in enumerate(distinct)}
    keys = values.copy()
    keys[gone] = [0.5 * ceiling * (rank[key] + 1) / len(distinct) for key in composite]
    return keys


def _log_gap(x, x_old, floor):
    mask = (x > floor) & (x_old > floor)
    if not mask.any():
        return 0.0
    return float(np.max(np.abs(np.log(x[mask]) - np.log(x_old[mask]))))
