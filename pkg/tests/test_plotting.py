import re

import numpy as np
import pytest

from fitsink import (
    BipartiteMatrix,
    GaugeSpec,
    apply_gauge,
    barrier_line,
    classify_pathways,
    fc_solve,
    generate_nested,
    plotting,
    reorder,
    trajectories,
)

F_STAR = np.array([1.2, 1.2, 0.6])
Q_STAR = np.array([0.75, 0.75, 1.5])


def _portrait(matrix, F, Q):
    return reorder(matrix, F, Q), barrier_line(matrix, F, Q)


def test_mstar_portrait(mstar, tmp_path):
    ordered, line = _portrait(mstar, F_STAR, Q_STAR)
    path = tmp_path / "m.svg"
    plotting.render_matrix_svg(ordered, line, path)
    svg = path.read_text()
    cells = set(re.findall(r'id="cell-(\d+)-(\d+)"', svg))
    assert len(cells) == 8
    # lowest-fitness row against the most complex column stays empty
    assert ("2", "2") not in cells
    assert 'id="barrier-line"' in svg


def test_corner_lies_above_the_steps(mstar):
    ordered, line = _portrait(mstar, F_STAR, Q_STAR)
    assert plotting.barrier_steps(ordered, line) == [3, 3, 2]


def test_single_cell_portrait(tmp_path):
    m = BipartiteMatrix([[1]])
    ordered, line = _portrait(m, [1.0], [1.0])
    path = tmp_path / "one.svg"
    plotting.render_matrix_svg(ordered, line, path)
    assert len(re.findall(r'id="cell-', path.read_text())) == 1


def test_svg_is_byte_deterministic(tmp_path):
    m = generate_nested(6, 9)
    res = fc_solve(m)
    ordered, line = reorder(m, res.fitness_order, res.complexity_order), barrier_line(m, res.fitness, res.complexity)
    a, b = tmp_path / "a.svg", tmp_path / "b.svg"
    plotting.render_matrix_svg(ordered, line, a)
    plotting.render_matrix_svg(ordered, line, b)
    assert a.read_bytes() == b.read_bytes()


def test_steps_never_cut_a_populated_cell(total_support_family):
    for a in total_support_family:
        m = BipartiteMatrix(a)
        res = fc_solve(m)
        ordered, line = reorder(m, res.fitness, res.complexity), barrier_line(m, res.fitness, res.complexity)
        for row, k in zip(ordered.matrix.entries, plotting.barrier_steps(ordered, line)):
            assert not row[k:].any()


@pytest.mark.parametrize("suffix", ["svg", "png", "pdf"])
def test_spectra_and_trajectory_figures(mstar, tmp_path, suffix):
    report = classify_pathways(mstar, F_STAR, Q_STAR)
    countries = plotting.representative_countries(report)
    assert countries and set(countries) <= set(mstar.row_labels)
    spectra = tmp_path / f"s.{suffix}"
    plotting.render_spectra(mstar, F_STAR, Q_STAR, countries, barrier_line(mstar, F_STAR, Q_STAR), spectra)
    assert spectra.stat().st_size > 0
    res = apply_gauge(fc_solve(mstar), mstar, GaugeSpec("dummy_country"))
    traj = tmp_path / f"t.{suffix}"
    plotting.render_trajectories(trajectories([(2000, res), (2001, res)]), traj)
    assert traj.stat().st_size > 0
