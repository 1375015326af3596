"""Scale fixing for Fitness-Complexity results and the FC/SK comparison."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DimensionMismatch, NonPositiveInput, UnknownLabel
from .fitness import FCOptions, fc_solve
from .model import BipartiteMatrix, FCResult, GaugeSpec
from .ranking import pearson, spearman
from .sinkhorn import ScalingSolution

DUMMY_LABEL = "__dummy__"


def rescale(F, Q, alpha):
    """Move along the symmetry orbit: ``F -> alpha F`` and ``Q -> alpha Q``.

    In scaling coordinates (``x = 1/F``, ``y = Q``) this is
    ``(x, y) -> (x / alpha, y * alpha)``.
    """
    F = np.asarray(F, dtype=float)
    Q = np.asarray(Q, dtype=float)
    if not alpha > 0:
        raise NonPositiveInput("alpha must be positive")
    if (F < 0).any() or (Q < 0).any():
        raise NonPositiveInput("scores must be non-negative")
    return alpha * F, alpha * Q


def apply_gauge(
    result: FCResult,
    matrix: BipartiteMatrix,
    gauge: GaugeSpec,
    options: Optional[FCOptions] = None,
) -> FCResult:
    """Return ``result`` expressed in the scale selected by ``gauge``.

    The dummy-country gauge re-solves ``matrix`` with an extra all-ones row,
    pins that row's fitness to ``gauge.target_value`` and then drops it.
    The re-solve can reorder near-degenerate fitness values; the other
    gauges are pure rescalings.
    """
    if gauge.kind == "normalization":
        a, b = 1.0 / result.fitness.mean(), 1.0 / result.complexity.mean()
        return _scaled(result, a, b, gauge)

    if gauge.kind == "dummy_country":
        options = options or FCOptions(schedule=result.schedule)
        label = DUMMY_LABEL
        while label in matrix.row_labels:
            label += "_"
        augmented = matrix.with_row(np.ones(matrix.shape[1]), label)
        solved = fc_solve(augmented, options)
        alpha = gauge.target_value / solved.fitness[-1]
        scaled = _scaled(solved, alpha, alpha, gauge)
        return dataclasses.replace(
            scaled,
            fitness=scaled.fitness[:-1],
            fitness_order=scaled.fitness_order[:-1],
            zero_limit_rows=tuple(i for i in solved.zero_limit_rows if i < matrix.shape[0]),
            row_labels=matrix.row_labels,
            gauge=gauge,
        )

    if gauge.kind == "reference_row":
        if gauge.label not in result.row_labels:
            raise UnknownLabel(f"unknown row label {gauge.label!r}")
        anchor = result.fitness[result.row_labels.index(gauge.label)]
    else:
        if gauge.label not in result.col_labels:
            raise UnknownLabel(f"unknown column label {gauge.label!r}")
        anchor = result.complexity[result.col_labels.index(gauge.label)]
    if not anchor > 0:
        raise NonPositiveInput(f"reference {gauge.label!r} has zero score")
    alpha = gauge.target_value / anchor
    return _scaled(result, alpha, alpha, gauge)


def _scaled(result, a, b, gauge):
    return dataclasses.replace(
        result,
        fitness=result.fitness * a,
        complexity=result.complexity * b,
        fitness_order=result.fitness_order * a,
        complexity_order=result.complexity_order * b,
        gauge=gauge,
    )


@dataclass(frozen=True)
class EquivalenceReport:
    """Agreement between an FC fixed point and an SK scaling of the same matrix.

    Correlations are ``None`` when an input is constant; ``flags`` then
    contains ``"ConstantInput"``.  ``pearson_F_vs_u`` is the literal
    correlation of fitness with ``u`` and is expected to be negative.
    """

    spearman_F_vs_inv_u: Optional[float]
    pearson_logF_vs_neg_logu: Optional[float]
    pearson_Q_vs_v_after_gauge: Optional[float]
    max_relative_gap_after_gauge: float
    pearson_F_vs_u: Optional[float] = None
    max_relative_gap_Q_vs_v: float = 0.0
    flags: tuple = ()


def _best_gap(products):
    """Minimise ``max |p_i beta - 1|`` over beta; returns the optimum gap."""
    lo, hi = float(np.min(products)), float(np.max(products))
    return (hi - lo) / (hi + lo)


def equivalence_report(fc: FCResult, sk: ScalingSolution) -> EquivalenceReport:
    F, Q = fc.fitness, fc.complexity
    if F.shape != sk.u.shape or Q.shape != sk.v.shape:
        raise DimensionMismatch("FC and SK results come from matrices of different shapes")
    if (F <= 0).any() or (Q <= 0).any():
        raise NonPositiveInput("equivalence needs strictly positive fitness and complexity")
    inv_u = np.exp(-sk.log_u)
    flags = []
    rho = spearman(F, inv_u)
    r_log = pearson(np.log(F), -sk.log_u)
    r_q = pearson(Q, sk.v)
    if rho is None or r_log is None or r_q is None:
        flags.append("ConstantInput")
    # F_i u_i is constant at a shared fixed point; work in logs to survive drift.
    gap = _best_gap(np.exp(np.log(F) + sk.log_u - np.mean(np.log(F) + sk.log_u)))
    gap_q = _best_gap(np.exp(np.log(Q) - sk.log_v - np.mean(np.log(Q) - sk.log_v)))
    return EquivalenceReport(
        spearman_F_vs_inv_u=rho,
        pearson_logF_vs_neg_logu=r_log,
        pearson_Q_vs_v_after_gauge=r_q,
        max_relative_gap_after_gauge=gap,
        pearson_F_vs_u=pearson(F, sk.u),
        max_relative_gap_Q_vs_v=gap_q,
        flags=tuple(flags),
    )
