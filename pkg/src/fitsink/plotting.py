"""Static figures: matrix portrait, export spectra and fitness trajectories.

Figures are built on :class:`matplotlib.figure.Figure` directly (no pyplot
state).  SVG output is byte-deterministic: the ``Date`` metadata is dropped
and the SVG hash salt is fixed.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib
import numpy as np
from matplotlib.figure import Figure
from matplotlib.patches import Rectangle

from .model import BipartiteMatrix
from .nestedness import BarrierLine, OrderedMatrix, PathwayReport, Trajectories, country_spectrum

RC = {
    "svg.hashsalt": "fitsink",
    "svg.fonttype": "none",
    "font.size": 8,
    "axes.linewidth": 0.6,
}
MAX_VECTOR_CELLS = 50_000
LINE_COLOR = "#d62728"
CELL_COLOR = "#1f3b73"


def _save(fig, path):
    path = Path(path)
    fmt = path.suffix.lstrip(".").lower() or "svg"
    with matplotlib.rc_context(RC):
        metadata = {"Date": None} if fmt in ("svg", "pdf") else None
        fig.savefig(path, format=fmt, metadata=metadata, dpi=150)


def barrier_steps(ordered: OrderedMatrix, line: BarrierLine, rtol=1e-12):
    """Per reordered row, the number of leading columns on or below the iso-line."""
    t = line.threshold
    q = ordered.col_scores
    return [int(np.sum(q <= t * f * (1 + rtol))) for f in ordered.row_scores]


def _step_polyline(steps):
    xs, ys = [], []
    for i, k in enumerate(steps):
        xs += [k, k]
        ys += [i, i + 1]
    return xs, ys


def matrix_figure(ordered: OrderedMatrix, line: BarrierLine) -> Figure:
    m = ordered.matrix
    n_rows, n_cols = m.shape
    width = min(10.0, 2.0 + 0.25 * n_cols)
    height = min(10.0, 1.5 + 0.25 * n_rows)
    with matplotlib.rc_context(RC):
        fig = Figure(figsize=(width, height))
        ax = fig.add_subplot(1, 1, 1)
        rows, cols = np.nonzero(m.entries)
        if rows.size <= MAX_VECTOR_CELLS:
            for i, j in zip(rows, cols):
                ax.add_patch(
                    Rectangle((j, i), 1, 1, facecolor=CELL_COLOR, edgecolor="none", gid=f"cell-{i}-{j}")
                )
        else:
            ax.imshow(m.entries, cmap="Greys", extent=(0, n_cols, n_rows, 0), interpolation="nearest")
        xs, ys = _step_polyline(barrier_steps(ordered, line))
        ax.plot(xs, ys, color=LINE_COLOR, linewidth=1.2, gid="barrier-line")
        ax.set_xlim(0, n_cols)
        ax.set_ylim(n_rows, 0)
        ax.set_aspect("auto")
        if n_cols <= 40:
            ax.set_xticks(np.arange(n_cols) + 0.5)
            ax.set_xticklabels(m.col_labels, rotation=90)
        if n_rows <= 40:
            ax.set_yticks(np.arange(n_rows) + 0.5)
            ax.set_yticklabels(m.row_labels)
        ax.set_xlabel("products (complexity ascending)")
        ax.set_ylabel("countries (fitness descending)")
        ax.set_title(f"Q/F barrier t = {line.threshold:.6g}")
        fig.tight_layout()
    return fig


def render_matrix_svg(ordered: OrderedMatrix, line: BarrierLine, path) -> None:
    """Write the reordered matrix with the barrier iso-line as a step polyline.

    Each populated cell is its own SVG group with id ``cell-<row>-<col>`` in
    reordered coordinates; the line has id ``barrier-line``.
    """
    _save(matrix_figure(ordered, line), path)


def spectra_figure(matrix: BipartiteMatrix, F, Q, countries, line: BarrierLine) -> Figure:
    F = np.asarray(F, dtype=float)
    logq = np.log(np.asarray(Q, dtype=float)[np.asarray(Q) > 0])
    lo, hi = float(logq.min()), float(logq.max())
    pad = 0.05 * (hi - lo or 1.0)
    with matplotlib.rc_context(RC):
        fig = Figure(figsize=(7.0, 0.9 * len(countries) + 0.6))
        axes = fig.subplots(len(countries), 1, sharex=True, squeeze=False)[:, 0]
        for ax, country in zip(axes, countries):
            spec = country_spectrum(matrix, Q, country)
            xs = [x for _, x in spec if math.isfinite(x)]
            ax.vlines(xs, 0, 1, color=CELL_COLOR, linewidth=0.8)
            f = F[matrix.row_index(country)]
            if f > 0:
                ax.axvline(math.log(line.threshold * f), color=LINE_COLOR, linewidth=1.2)
            ax.set_yticks([])
            ax.set_ylabel(country, rotation=0, ha="right", va="center")
            ax.set_xlim(lo - pad, hi + pad)
        axes[-1].set_xlabel("ln complexity")
        fig.tight_layout()
    return fig


def representative_countries(report: PathwayReport, limit=4):
    """Top-fitness country of each label, then the weakest country."""
    picks = []
    ranked = sorted(report.countries, key=lambda c: (-c.fitness, c.country))
    for label in ("Explorer", "Exploiter", "Learner"):
        for c in ranked:
            if c.label == label:
                picks.append(c.country)
                break
    if ranked and ranked[-1].country not in picks:
        picks.append(ranked[-1].country)
    return picks[:limit]


def render_spectra(matrix, F, Q, countries, line, path) -> None:
    _save(spectra_figure(matrix, F, Q, countries, line), path)


def trajectories_figure(traj: Trajectories) -> Figure:
    by_country = {}
    for r in traj.records:
        by_country.setdefault(r.country, []).append(r)
    with_income = any(r.ln_income is not None for r in traj.records)
    with matplotlib.rc_context(RC):
        fig = Figure(figsize=(6.0, 4.5))
        ax = fig.add_subplot(1, 1, 1)
        for country in sorted(by_country):
            rows = by_country[country]
            if with_income:
                pts = [(r.ln_fitness, r.ln_income) for r in rows if r.ln_income is not None]
            else:
                pts = [(r.year, r.ln_fitness) for r in rows]
            if pts:
                xs, ys = zip(*pts)
                ax.plot(xs, ys, linewidth=0.8, marker=".", markersize=2)
        if with_income:
            ax.set_xlabel("ln fitness")
            ax.set_ylabel("ln income")
        else:
            ax.set_xlabel("year")
            ax.set_ylabel("ln fitness")
        kind = traj.gauge.kind if traj.gauge is not None else "normalization"
        ax.set_title(f"fitness trajectories ({kind} gauge)")
        if traj.mean_ln_fitness:
            inset = ax.inset_axes([0.62, 0.08, 0.34, 0.3])
            years = sorted(traj.mean_ln_fitness)
            inset.plot(years, [traj.mean_ln_fitness[y] for y in years], color="black", linewidth=0.8)
            inset.set_title("mean ln F", fontsize=6)
            inset.tick_params(labelsize=5)
        fig.tight_layout()
    return fig


def render_trajectories(traj: Trajectories, path) -> None:
    _save(trajectories_figure(traj), path)
