"""Domain types, validation, target construction and synthetic matrices."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import networkx as nx
import numpy as np

from .errors import DimensionMismatch, EmptyMatrix, EmptyRemoved, UnknownLabel

BALANCE_RTOL = 1e-12


def _default_labels(prefix, n):
    return tuple(f"{prefix}{i + 1}" for i in range(n))


def _check_unique(labels, axis):
    if len(set(labels)) != len(labels):
        raise ValueError(f"{axis} labels must be unique")


@dataclass(frozen=True, eq=False)
class BipartiteMatrix:
    """Binary country-by-product incidence matrix with axis labels.

    ``entries`` is stored as a dense ``int8`` array of shape
    ``(len(row_labels), len(col_labels))``.  Sparse inputs are densified.
    """

    entries: np.ndarray
    row_labels: tuple = None
    col_labels: tuple = None

    def __post_init__(self):
        entries = self.entries
        if hasattr(entries, "toarray"):
            entries = entries.toarray()
        entries = np.array(entries)
        if entries.ndim != 2 or entries.shape[0] < 1 or entries.shape[1] < 1:
            raise DimensionMismatch("matrix must be two-dimensional with at least one row and column")
        if not np.isin(entries, (0, 1)).all():
            raise ValueError("BipartiteMatrix entries must be 0 or 1")
        entries = entries.astype(np.int8)
        entries.setflags(write=False)
        n, m = entries.shape
        rows = tuple(self.row_labels) if self.row_labels is not None else _default_labels("c", n)
        cols = tuple(self.col_labels) if self.col_labels is not None else _default_labels("p", m)
        if len(rows) != n or len(cols) != m:
            raise DimensionMismatch(f"labels ({len(rows)}, {len(cols)}) do not match shape {entries.shape}")
        _check_unique(rows, "row")
        _check_unique(cols, "column")
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "row_labels", rows)
        object.__setattr__(self, "col_labels", cols)

    @property
    def shape(self):
        return self.entries.shape

    @property
    def diversification(self):
        return self.entries.sum(axis=1)

    @property
    def ubiquity(self):
        return self.entries.sum(axis=0)

    def as_float(self):
        return self.entries.astype(float)

    def row_index(self, label):
        try:
            return self.row_labels.index(label)
        except ValueError:
            raise UnknownLabel(f"unknown row label {label!r}") from None

    def col_index(self, label):
        try:
            return self.col_labels.index(label)
        except ValueError:
            raise UnknownLabel(f"unknown column label {label!r}") from None

    def permuted(self, row_perm, col_perm):
        row_perm = np.asarray(row_perm)
        col_perm = np.asarray(col_perm)
        return BipartiteMatrix(
            self.entries[np.ix_(row_perm, col_perm)],
            [self.row_labels[i] for i in row_perm],
            [self.col_labels[j] for j in col_perm],
        )

    def with_row(self, row, label):
        return BipartiteMatrix(
            np.vstack([self.entries, np.asarray(row, dtype=np.int8)[None, :]]),
            self.row_labels + (label,),
            self.col_labels,
        )

    def __eq__(self, other):
        if not isinstance(other, BipartiteMatrix):
            return NotImplemented
        return (
            self.row_labels == other.row_labels
            and self.col_labels == other.col_labels
            and np.array_equal(self.entries, other.entries)
        )

    def __repr__(self):
        return f"BipartiteMatrix(shape={self.shape})"


@dataclass(frozen=True, eq=False)
class ScalingProblem:
    """Non-negative matrix ``A`` with row targets ``r`` and column targets ``c``."""

    matrix: np.ndarray
    row_targets: np.ndarray
    col_targets: np.ndarray
    row_labels: Optional[tuple] = None
    col_labels: Optional[tuple] = None

    def __post_init__(self):
        a = np.array(self.matrix, dtype=float)
        r = np.array(self.row_targets, dtype=float).ravel()
        c = np.array(self.col_targets, dtype=float).ravel()
        if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
            raise DimensionMismatch("matrix must be two-dimensional with at least one row and column")
        if a.shape != (r.size, c.size):
            raise DimensionMismatch(f"targets ({r.size}, {c.size}) do not match shape {a.shape}")
        if not np.all(np.isfinite(a)) or (a < 0).any():
            raise ValueError("matrix entries must be finite and non-negative")
        if (r <= 0).any() or (c <= 0).any():
            raise ValueError("targets must be strictly positive")
        if abs(r.sum() - c.sum()) > BALANCE_RTOL * r.sum():
            raise ValueError(f"unbalanced targets: sum(r)={r.sum()!r}, sum(c)={c.sum()!r}")
        rows = tuple(self.row_labels) if self.row_labels is not None else _default_labels("c", a.shape[0])
        cols = tuple(self.col_labels) if self.col_labels is not None else _default_labels("p", a.shape[1])
        for arr in (a, r, c):
            arr.setflags(write=False)
        object.__setattr__(self, "matrix", a)
        object.__setattr__(self, "row_targets", r)
        object.__setattr__(self, "col_targets", c)
        object.__setattr__(self, "row_labels", rows)
        object.__setattr__(self, "col_labels", cols)

    @classmethod
    def from_matrix(cls, matrix: BipartiteMatrix):
        """Uniform-marginal problem on a binary matrix (see :func:`default_targets`)."""
        r, c = default_targets(*matrix.shape)
        return cls(matrix.as_float(), r, c, matrix.row_labels, matrix.col_labels)

    @property
    def shape(self):
        return self.matrix.shape


@dataclass(frozen=True)
class ValidationReport:
    empty_rows: tuple
    empty_cols: tuple
    has_support: bool
    has_total_support: bool
    balanced: bool


@dataclass(frozen=True)
class GaugeSpec:
    """How the scale freedom of the fixed point is pinned.

    ``kind`` is one of ``normalization``, ``dummy_country``,
    ``reference_row`` or ``reference_col``; the reference kinds need ``label``.
    """

    kind: str = "normalization"
    label: Optional[str] = None
    target_value: float = 1.0

    KINDS = ("normalization", "dummy_country", "reference_row", "reference_col")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown gauge kind {self.kind!r}")
        if self.kind.startswith("reference") and self.label is None:
            raise ValueError(f"gauge {self.kind} needs a label")
        if not self.target_value > 0:
            raise ValueError("target_value must be positive")

    @classmethod
    def parse(cls, text, target_value=1.0):
        """Parse the CLI form: ``normalization``, ``dummy``, ``reference-row:LABEL``..."""
        if text in ("normalization", "norm"):
            return cls("normalization", target_value=target_value)
        if text in ("dummy", "dummy_country", "dummy-country"):
            return cls("dummy_country", target_value=target_value)
        head, sep, label = text.partition(":")
        if sep and not label:
            raise ValueError(f"gauge {text!r} needs a label after ':'")
        if sep and head in ("reference-row", "reference_row"):
            return cls("reference_row", label, target_value)
        if sep and head in ("reference-col", "reference_col"):
            return cls("reference_col", label, target_value)
        raise ValueError(f"cannot parse gauge {text!r}")

    def to_dict(self):
        return {"kind": self.kind, "label": self.label, "target_value": self.target_value}

    @classmethod
    def from_dict(cls, d):
        return cls(d["kind"], d.get("label"), float(d.get("target_value", 1.0)))


@dataclass(frozen=True, eq=False)
class FCResult:
    """Converged (or abandoned) Fitness-Complexity iterate.

    Rows in ``zero_limit_rows`` have fitness exactly zero, and so do the
    products they export.  ``fitness_order``/``complexity_order`` are strictly
    positive keys that equal the scores for surviving entries and rank the
    vanishing ones below them, in the order in which they vanished.  Use
    them wherever a complete ranking is needed.
    """

    fitness: np.ndarray
    complexity: np.ndarray
    iterations: int
    converged: bool
    residual: float
    zero_limit_rows: tuple = ()
    row_labels: tuple = ()
    col_labels: tuple = ()
    schedule: str = "jacobi"
    gauge: GaugeSpec = field(default_factory=GaugeSpec)
    fitness_order: Optional[np.ndarray] = None
    complexity_order: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.fitness_order is None:
            object.__setattr__(self, "fitness_order", np.asarray(self.fitness, dtype=float))
        if self.complexity_order is None:
            object.__setattr__(self, "complexity_order", np.asarray(self.complexity, dtype=float))

    def fitness_of(self, label):
        return float(self.fitness[self.row_labels.index(label)])


# ---------------------------------------------------------------- operations


def default_targets(n, m):
    """Row targets of one and column targets ``n/m``, so both sum to ``n``."""
    if n < 1 or m < 1:
        raise ValueError("need n, m >= 1")
    return np.ones(n), np.full(m, n / m)


def _integer_capacities(values):
    """Scale rational-looking floats to a common integer grid, or return None."""
    fracs = []
    for x in values:
        f = Fraction(float(x)).limit_denominator(10**6)
        if abs(float(f) - x) > 1e-12 * abs(x):
            return None
        fracs.append(f)
    den = 1
    for f in fracs:
        den = den * f.denominator // math.gcd(den, f.denominator)
    ints = [int(f * den) for f in fracs]
    if max(ints) > 2**52:
        return None
    return ints


def transport_support(a, r, c):
    """Decide support and total support of the transportation polytope.

    Returns ``(has_support, has_total_support, flow)`` where ``flow`` is a
    feasible plan (scaled back to the targets' units) when support holds.
    Support means some ``B >= 0`` with row sums ``r``, column sums ``c`` and
    ``B_ij = 0`` wherever ``a_ij = 0`` exists.  Total support additionally
    requires every positive ``a_ij`` to carry positive mass in some such ``B``.
    """
    a = np.asarray(a, dtype=float)
    n, m = a.shape
    targets = list(np.asarray(r, float)) + list(np.asarray(c, float))
    caps = _integer_capacities(targets)
    exact = caps is not None
    if not exact:
        caps = targets
    total = sum(caps[:n])

    g = nx.DiGraph()
    for i in range(n):
        g.add_edge("s", ("r", i), capacity=caps[i])
    for j in range(m):
        g.add_edge(("c", j), "t", capacity=caps[n + j])
    rows, cols = np.nonzero(a > 0)
    for i, j in zip(rows, cols):
        g.add_edge(("r", int(i)), ("c", int(j)))
    value, flow_dict = nx.maximum_flow(g, "s", "t")

    tol = 0 if exact else 1e-9 * total
    if value < total - tol:
        return False, False, None

    scale = total / float(np.sum(np.asarray(r, float)))
    plan = np.zeros((n, m))
    residual = nx.DiGraph()
    residual.add_nodes_from([("r", i) for i in range(n)] + [("c", j) for j in range(m)])
    for i, j in zip(rows, cols):
        f = flow_dict[("r", int(i))][("c", int(j))]
        plan[i, j] = f / scale
        residual.add_edge(("r", int(i)), ("c", int(j)))
        if f > tol:
            residual.add_edge(("c", int(j)), ("r", int(i)))
    component = {}
    for k, comp in enumerate(nx.strongly_connected_components(residual)):
        for node in comp:
            component[node] = k
    total_support = all(
        plan[i, j] > 0 or component[("r", int(i))] == component[("c", int(j))]
        for i, j in zip(rows, cols)
    )
    return True, total_support, plan


def validate(obj) -> ValidationReport:
    """Structural report for a :class:`BipartiteMatrix` or :class:`ScalingProblem`.

    Binary matrices are checked against :func:`default_targets`.
    """
    if isinstance(obj, BipartiteMatrix):
        a = obj.as_float()
        r, c = default_targets(*a.shape)
        balanced = True
    elif isinstance(obj, ScalingProblem):
        a, r, c = obj.matrix, obj.row_targets, obj.col_targets
        balanced = abs(r.sum() - c.sum()) <= BALANCE_RTOL * r.sum()
    else:
        raise TypeError(f"cannot validate {type(obj).__name__}")
    empty_rows = tuple(int(i) for i in np.nonzero(~(a > 0).any(axis=1))[0])
    empty_cols = tuple(int(j) for j in np.nonzero(~(a > 0).any(axis=0))[0])
    if empty_rows or empty_cols or not balanced:
        support, total = False, False
    else:
        support, total, _ = transport_support(a, r, c)
    return ValidationReport(empty_rows, empty_cols, support, total, balanced)


def generate_nested(n, m, noise=0.0, seed=0) -> BipartiteMatrix:
    """Synthetic nested matrix; row ``c`` (1-based) exports the first ``ceil(m*c/n)`` products.

    With ``noise > 0`` each cell flips with probability
    ``noise * exp(-d)`` where ``d`` counts cells between it and the border
    (``d = 0`` for the cells adjacent to it).
    """
    if n < 1 or m < 1:
        raise ValueError("need n, m >= 1")
    if not 0.0 <= noise <= 1.0:
        raise ValueError("noise must lie in [0, 1]")
    rows = np.arange(1, n + 1)[:, None]
    cols = np.arange(1, m + 1)[None, :]
    border = np.ceil(m * rows / n)
    entries = (cols <= border).astype(np.int8)
    if noise > 0:
        dist = np.where(cols <= border, border - cols, cols - border - 1)
        rng = np.random.default_rng(seed)
        flips = rng.random((n, m)) < noise * np.exp(-dist)
        entries = np.where(flips, 1 - entries, entries).astype(np.int8)
    return BipartiteMatrix(entries)


def drop_empty(matrix: BipartiteMatrix):
    """Remove all-zero rows and columns; returns ``(matrix, (removed_rows, removed_cols))``."""
    e = matrix.entries
    keep_rows = e.any(axis=1)
    keep_cols = e.any(axis=0)
    removed_rows = [lab for lab, k in zip(matrix.row_labels, keep_rows) if not k]
    removed_cols = [lab for lab, k in zip(matrix.col_labels, keep_cols) if not k]
    if not keep_rows.any() or not keep_cols.any():
        raise EmptyMatrix("no populated rows or columns remain")
    if not removed_rows and not removed_cols:
        return matrix, ([], [])
    warnings.warn(
        f"dropped {len(removed_rows)} empty rows and {len(removed_cols)} empty columns",
        EmptyRemoved,
        stacklevel=2,
    )
    out = BipartiteMatrix(
        e[np.ix_(keep_rows, keep_cols)],
        [lab for lab, k in zip(matrix.row_labels, keep_rows) if k],
        [lab for lab, k in zip(matrix.col_labels, keep_cols) if k],
    )
    return out, (removed_rows, removed_cols)


def require_nonempty(matrix: BipartiteMatrix):
    if not matrix.entries.any(axis=1).all() or not matrix.entries.any(axis=0).all():
        raise EmptyMatrix("matrix has empty rows or columns; call drop_empty first")
