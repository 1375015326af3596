"""Matrix reordering, the Q/F barrier line, export spectra and pathway labels."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import DimensionMismatch, EmptyMatrix, GaugeMismatch
from .model import BipartiteMatrix
from .ranking import ascending_order, descending_order, tie_groups

LEARNER, EXPLOITER, EXPLORER = "Learner", "Exploiter", "Explorer"


def _check_dims(matrix, F, Q):
    F = np.asarray(F, dtype=float)
    Q = np.asarray(Q, dtype=float)
    if F.shape != (matrix.shape[0],) or Q.shape != (matrix.shape[1],):
        raise DimensionMismatch(f"scores {F.shape}, {Q.shape} do not fit matrix {matrix.shape}")
    return F, Q


@dataclass(frozen=True, eq=False)
class OrderedMatrix:
    matrix: BipartiteMatrix
    row_perm: np.ndarray
    col_perm: np.ndarray
    row_scores: np.ndarray
    col_scores: np.ndarray


def reorder(matrix: BipartiteMatrix, F, Q) -> OrderedMatrix:
    """Rows by fitness descending, columns by complexity ascending.

    Near-ties (relative gap below 1e-9) are ordered by label, so permuted
    copies of a matrix reorder to the same result.
    """
    F, Q = _check_dims(matrix, F, Q)
    rows = descending_order(F, matrix.row_labels)
    cols = ascending_order(Q, matrix.col_labels)
    return OrderedMatrix(matrix.permuted(rows, cols), rows, cols, F[rows], Q[cols])


@dataclass(frozen=True)
class BarrierLine:
    threshold: float
    attained_at: tuple


def _ratios(matrix, F, Q):
    with np.errstate(divide="ignore", invalid="ignore"):
        return Q[None, :] / F[:, None]


def barrier_line(matrix: BipartiteMatrix, F, Q, rtol=1e-12) -> BarrierLine:
    """Smallest iso-line ``Q/F = t`` with no exported product above it.

    ``t`` is the largest ``Q_p / F_c`` over populated cells; cells within
    ``rtol`` of it are reported as attaining it.
    """
    F, Q = _check_dims(matrix, F, Q)
    mask = matrix.entries.astype(bool) & (F[:, None] > 0)
    if not mask.any():
        raise EmptyMatrix("no populated cell with positive fitness")
    ratios = _ratios(matrix, F, Q)
    t = float(np.max(ratios[mask]))
    hits = np.argwhere(mask & (ratios >= t * (1 - rtol)))
    return BarrierLine(t, tuple((matrix.row_labels[i], matrix.col_labels[j]) for i, j in hits))


def country_spectrum(matrix: BipartiteMatrix, Q, country):
    """Exported products of ``country`` as ``(product, ln Q)`` sorted by complexity."""
    Q = np.asarray(Q, dtype=float)
    if Q.shape != (matrix.shape[1],):
        raise DimensionMismatch("Q does not match the matrix columns")
    i = matrix.row_index(country)
    cols = np.nonzero(matrix.entries[i])[0]
    order = cols[ascending_order(Q[cols], [matrix.col_labels[j] for j in cols])]
    with np.errstate(divide="ignore"):
        return [(matrix.col_labels[j], float(np.log(Q[j]))) for j in order]


@dataclass(frozen=True)
class CountryPathway:
    country: str
    fitness: float
    fitness_tercile: str
    frontier_gap: float
    near_line_density: float
    label: str
    low_confidence: bool = False


@dataclass(frozen=True)
class PathwayReport:
    threshold: float
    near_band: float
    gap_threshold: float
    countries: tuple

    def by_country(self):
        return {c.country: c for c in self.countries}


def _terciles(F):
    """Tercile per country from tie-grouped rank; ties take the upper rank."""
    groups = tie_groups(F)
    n = len(F)
    # rank of the last member of each tie group, 0-based
    upper = np.array([np.sum(groups <= g) - 1 for g in groups])
    names = ("low", "mid", "high")
    return [names[min(2, (3 * int(k)) // n)] for k in upper]


def classify_pathways(
    matrix: BipartiteMatrix,
    F,
    Q,
    near_band=0.5,
    gap_threshold=math.log(2.0),
    density_cutoff=0.05,
) -> PathwayReport:
    """Label each country Learner, Exploiter or Explorer.

    ``frontier_gap`` is ``ln(t F_c) - ln(max exported Q_p)`` and
    ``near_line_density`` the share of exports with ``Q_p >= near_band t F_c``.
    Rules, in order: low tercile at the frontier is a Learner; a non-high
    country off the frontier or with a sparse band is an Exploiter; a high
    country at the frontier with a dense band is an Explorer.  Other
    combinations get the closest label with ``low_confidence=True``.
    Countries with zero fitness are skipped.
    """
    F, Q = _check_dims(matrix, F, Q)
    t = barrier_line(matrix, F, Q).threshold
    terciles = _terciles(F)
    groups = tie_groups(F)
    records = []
    for i, country in enumerate(matrix.row_labels):
        exports = np.nonzero(matrix.entries[i])[0]
        if F[i] <= 0 or exports.size == 0:
            continue
        frontier = t * F[i]
        gap = max(0.0, math.log(frontier) - math.log(float(np.max(Q[exports]))))
        density = float(np.mean(Q[exports] >= near_band * frontier))
        tercile = terciles[i]
        at_frontier = gap <= gap_threshold
        dense = density >= density_cutoff
        low_conf = False
        if tercile == "low" and at_frontier:
            label = LEARNER
        elif tercile != "high" and (not at_frontier or not dense):
            label = EXPLOITER
        elif tercile == "high" and dense and at_frontier:
            label = EXPLORER
        else:
            low_conf = True
            if tercile == "high":
                label = EXPLOITER
            else:
                # mid tercile, at the frontier and dense: side of the median decides
                label = EXPLORER if 2 * groups[i] >= groups.max() else LEARNER
        records.append(CountryPathway(country, float(F[i]), tercile, gap, density, label, low_conf))
    return PathwayReport(t, near_band, gap_threshold, tuple(records))


@dataclass(frozen=True)
class TrajectoryRecord:
    year: int
    country: str
    ln_fitness: float
    ln_income: Optional[float] = None


@dataclass(frozen=True)
class Trajectories:
    gauge: object
    records: tuple
    mean_ln_fitness: Mapping[int, float] = field(default_factory=dict)

    def series(self, country):
        return [(r.year, r.ln_fitness) for r in self.records if r.country == country]


def trajectories(
    yearly_results: Sequence[tuple],
    income: Optional[Mapping[tuple, float]] = None,
) -> Trajectories:
    """Long-format ``(year, country, ln F, ln income)`` table plus per-year mean ln F.

    ``income`` maps ``(country, year)`` to a positive value.  Countries
    absent in a year, or with zero fitness, are left out of that year.
    """
    results = sorted(yearly_results, key=lambda yr: yr[0])
    gauges = {res.gauge for _, res in results}
    if len(gauges) > 1:
        raise GaugeMismatch(f"results use different gauges: {sorted(g.kind for g in gauges)}")
    records = []
    means = {}
    for year, res in results:
        year_rows = []
        for label, f in sorted(zip(res.row_labels, res.fitness), key=lambda lf: lf[0]):
            if f <= 0:
                continue
            inc = None
            if income is not None and (label, year) in income and income[(label, year)] > 0:
                inc = math.log(income[(label, year)])
            year_rows.append(TrajectoryRecord(int(year), label, math.log(f), inc))
        if year_rows:
            means[int(year)] = float(np.mean([r.ln_fitness for r in year_rows]))
        records.extend(year_rows)
    return Trajectories(gauges.pop() if gauges else None, tuple(records), means)

