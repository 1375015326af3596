"""Tie-aware rank vectors and correlation helpers.

Solvers produce values that are equal in exact arithmetic but differ in the
last bits (symmetric rows of a matrix, for instance).  Ranks are therefore
computed after grouping values whose relative gap is below ``rtol``.
"""

import numpy as np
from scipy import stats


def tie_groups(values, rtol=1e-9):
    """Return an integer group id per entry, increasing with the value.

    Consecutive sorted values closer than ``rtol`` (relative to the larger
    magnitude) share a group.
    """
    x = np.asarray(values, dtype=float)
    if x.size == 0:
        return np.zeros(0, dtype=int)
    order = np.argsort(x, kind="stable")
    xs = x[order]
    scale = np.maximum(np.abs(xs[1:]), np.abs(xs[:-1]))
    gaps = np.abs(xs[1:] - xs[:-1])
    new_group = gaps > rtol * np.where(scale > 0, scale, 1.0)
    ids_sorted = np.concatenate([[0], np.cumsum(new_group)])
    groups = np.empty_like(ids_sorted)
    groups[order] = ids_sorted
    return groups


def rank_vector(values, rtol=1e-9):
    """Average ranks (1-based) of ``values`` with near-ties merged."""
    return stats.rankdata(tie_groups(values, rtol), method="average")


def descending_order(values, tiebreak, rtol=1e-9):
    """Indices sorting ``values`` descending; near-ties ordered by ``tiebreak``."""
    groups = tie_groups(values, rtol)
    return np.array(sorted(range(len(groups)), key=lambda i: (-groups[i], tiebreak[i])), dtype=int)


def ascending_order(values, tiebreak, rtol=1e-9):
    groups = tie_groups(values, rtol)
    return np.array(sorted(range(len(groups)), key=lambda i: (groups[i], tiebreak[i])), dtype=int)


def is_constant(values, rtol=1e-9):
    return len(set(tie_groups(values, rtol).tolist())) <= 1


def spearman(a, b, rtol=1e-9):
    """Spearman correlation on tie-grouped ranks; ``None`` for constant input."""
    if is_constant(a, rtol) or is_constant(b, rtol):
        return None
    ra, rb = rank_vector(a, rtol), rank_vector(b, rtol)
    # identical rank vectors give exactly 1; corrcoef would round to 1 - 2**-52
    if np.array_equal(ra, rb):
        return 1.0
    if np.array_equal(ra, len(ra) + 1 - rb):
        return -1.0
    return float(np.corrcoef(ra, rb)[0, 1])


def pearson(a, b, rtol=1e-9):
    if is_constant(a, rtol) or is_constant(b, rtol):
        return None
    return float(np.corrcoef(np.asarray(a, float), np.asarray(b, float))[0, 1])
