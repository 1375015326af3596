import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fitsink import (
    BipartiteMatrix,
    DimensionMismatch,
    EmptyMatrix,
    GaugeMismatch,
    GaugeSpec,
    UnknownLabel,
    apply_gauge,
    barrier_line,
    classify_pathways,
    country_spectrum,
    fc_solve,
    generate_nested,
    reorder,
    trajectories,
)


F_STAR = np.array([1.2, 1.2, 0.6])
Q_STAR = np.array([0.75, 0.75, 1.5])

# solved 8x8 instance in which c8 sits in the middle fitness tercile far below the line
EXPLOITER_CASE = [
    [1, 1, 1, 1, 1, 1, 1, 1],
    [0, 1, 0, 0, 0, 1, 1, 1],
    [1, 1, 1, 1, 1, 1, 1, 1],
    [1, 0, 1, 0, 1, 0, 0, 0],
    [1, 1, 1, 1, 1, 1, 1, 1],
    [1, 0, 1, 1, 0, 1, 1, 1],
    [0, 0, 1, 1, 0, 1, 1, 1],
    [1, 1, 0, 1, 1, 1, 1, 1],
]


def _random_matrix(seed, n=6, m=5, density=0.55):
    rng = np.random.default_rng(seed)
    a = (rng.random((n, m)) < density).astype(int)
    a[0, :] = 1
    a[:, 0] = 1
    return BipartiteMatrix(a)


def test_reorder_mstar(mstar):
    ordered = reorder(mstar, F_STAR, Q_STAR)
    assert ordered.matrix.entries.tolist() == [[1, 1, 1], [1, 1, 1], [1, 1, 0]]
    assert ordered.matrix.row_labels == ("c1", "c2", "c3")
    assert ordered.matrix.col_labels == ("p1", "p2", "p3")
    assert np.all(np.diff(ordered.row_scores) <= 0) and np.all(np.diff(ordered.col_scores) >= 0)


def test_reorder_permutations_reproduce_matrix(mstar):
    ordered = reorder(mstar, F_STAR, Q_STAR)
    again = mstar.entries[np.ix_(ordered.row_perm, ordered.col_perm)]
    assert np.array_equal(again, ordered.matrix.entries)


def test_reorder_permuted_copy(mstar):
    rows, cols = [2, 0, 1], [1, 2, 0]
    moved = mstar.permuted(rows, cols)
    a = reorder(mstar, F_STAR, Q_STAR)
    b = reorder(moved, F_STAR[rows], Q_STAR[cols])
    assert a.matrix == b.matrix
    assert np.array_equal(a.row_scores, b.row_scores) and np.array_equal(a.col_scores, b.col_scores)


@pytest.mark.parametrize("n", [3, 5, 8])
def test_nested_reorders_to_upper_left_triangle(n):
    m = generate_nested(n, n).permuted(np.random.default_rng(n).permutation(n), np.arange(n))
    res = fc_solve(m)
    ordered = reorder(m, res.fitness_order, res.complexity_order)
    expected = np.fliplr(np.triu(np.ones((n, n), dtype=int)))
    assert np.array_equal(ordered.matrix.entries, expected)


def test_reorder_dimension_check(mstar):
    with pytest.raises(DimensionMismatch):
        reorder(mstar, [1, 2], Q_STAR)


def test_barrier_line_mstar(mstar):
    line = barrier_line(mstar, F_STAR, Q_STAR)
    assert line.threshold == pytest.approx(1.25, abs=1e-15)
    assert set(line.attained_at) == {("c1", "p3"), ("c2", "p3"), ("c3", "p1"), ("c3", "p2")}


def test_barrier_line_trivial_cases():
    ones = BipartiteMatrix(np.ones((3, 3), dtype=int))
    line = barrier_line(ones, np.ones(3), np.ones(3))
    assert line.threshold == 1.0 and len(line.attained_at) == 9
    single = barrier_line(BipartiteMatrix([[1]]), [1.0], [1.0])
    assert single.threshold == 1.0 and single.attained_at == (("c1", "p1"),)


def test_barrier_line_needs_a_live_cell():
    with pytest.raises(EmptyMatrix):
        barrier_line(BipartiteMatrix([[1]]), [0.0], [1.0])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 100_000))
def test_no_populated_cell_above_the_line(seed):
    m = _random_matrix(seed)
    res = fc_solve(m)
    line = barrier_line(m, res.fitness, res.complexity)
    live = m.entries.astype(bool) & (res.fitness[:, None] > 0)
    ratios = res.complexity[None, :] / np.where(res.fitness > 0, res.fitness, 1.0)[:, None]
    assert not np.any(ratios[live] > line.threshold)
    assert np.any(ratios[live] == line.threshold)
    assert line.attained_at


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 100_000))
def test_region_above_line_is_a_staircase(seed):
    m = _random_matrix(seed)
    res = fc_solve(m)
    if res.zero_limit_rows:
        return
    ordered = reorder(m, res.fitness, res.complexity)
    t = barrier_line(m, res.fitness, res.complexity).threshold
    # cells attaining the line sit at Q = t F up to rounding
    above = ordered.col_scores[None, :] > t * ordered.row_scores[:, None] * (1 + 1e-12)
    assert not np.any(above & ordered.matrix.entries.astype(bool))
    # each row's forbidden set is a suffix, growing as fitness falls
    counts = above.sum(axis=1)
    for row, k in zip(above, counts):
        assert not row[: len(row) - k].any()
    assert np.all(np.diff(counts) >= 0)


def test_country_spectrum(mstar):
    spec = country_spectrum(mstar, Q_STAR, "c3")
    assert [p for p, _ in spec] == ["p1", "p2"]
    assert np.allclose([x for _, x in spec], [math.log(0.75)] * 2)
    single = BipartiteMatrix([[1, 1], [0, 1]])
    assert len(country_spectrum(single, [1.0, 2.0], "c2")) == 1
    with pytest.raises(UnknownLabel):
        country_spectrum(mstar, Q_STAR, "atlantis")


def test_classify_mstar(mstar):
    report = classify_pathways(mstar, F_STAR, Q_STAR).by_country()
    assert report["c3"].label == "Learner" and report["c3"].frontier_gap == pytest.approx(0, abs=1e-12)
    assert report["c1"].label == report["c2"].label == "Explorer"
    assert all(not c.low_confidence for c in report.values())
    assert report["c3"].fitness_tercile == "low" and report["c1"].fitness_tercile == "high"


def test_classify_hand_built_exploiter():
    # F and Q chosen so the middle country's best export sits 4x below its frontier
    m = BipartiteMatrix([[1, 0, 0], [1, 0, 0], [1, 1, 1]])
    F = np.array([1.0, 4.0, 8.0])
    Q = np.array([1.0, 4.0, 8.0])
    rec = classify_pathways(m, F, Q).by_country()["c2"]
    assert rec.fitness_tercile == "mid"
    assert rec.frontier_gap == pytest.approx(math.log(4))
    assert rec.label == "Exploiter" and not rec.low_confidence


def test_classify_solved_exploiter():
    m = BipartiteMatrix(EXPLOITER_CASE)
    res = fc_solve(m)
    assert res.converged and res.zero_limit_rows == ()
    rec = classify_pathways(m, res.fitness, res.complexity).by_country()["c8"]
    assert rec.fitness_tercile == "mid"
    assert rec.frontier_gap > math.log(2)
    assert rec.label == "Exploiter" and not rec.low_confidence


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 100_000))
def test_classification_fields_in_range(seed):
    m = _random_matrix(seed, 7, 6)
    res = fc_solve(m)
    for rec in classify_pathways(m, res.fitness, res.complexity).countries:
        assert rec.frontier_gap >= 0
        assert 0 <= rec.near_line_density <= 1
        assert rec.label in ("Learner", "Exploiter", "Explorer")


def test_classification_is_gauge_invariant(total_support_family):
    for a in total_support_family[:8]:
        m = BipartiteMatrix(a)
        res = fc_solve(m)
        base = classify_pathways(m, res.fitness, res.complexity)
        for spec in (GaugeSpec("reference_row", m.row_labels[0], 7.0), GaugeSpec("reference_col", m.col_labels[-1], 0.01)):
            g = apply_gauge(res, m, spec)
            other = classify_pathways(m, g.fitness, g.complexity)
            assert [c.label for c in other.countries] == [c.label for c in base.countries]
            assert np.allclose([c.frontier_gap for c in other.countries], [c.frontier_gap for c in base.countries], atol=1e-9)
            assert other.threshold == pytest.approx(base.threshold, rel=1e-12)


def test_classification_is_permutation_equivariant(total_support_family):
    a = total_support_family[0]
    m = BipartiteMatrix(a)
    res = fc_solve(m)
    rows = np.random.default_rng(1).permutation(a.shape[0])
    moved = m.permuted(rows, np.arange(a.shape[1]))
    res2 = fc_solve(moved)
    base = classify_pathways(m, res.fitness, res.complexity).by_country()
    other = classify_pathways(moved, res2.fitness, res2.complexity).by_country()
    assert {k: v.label for k, v in base.items()} == {k: v.label for k, v in other.items()}


def _dummy(matrix):
    return apply_gauge(fc_solve(matrix), matrix, GaugeSpec("dummy_country"))


def test_flat_trajectories_for_identical_years(mstar):
    res = _dummy(mstar)
    traj = trajectories([(2001, res), (2000, res)])
    assert [r.year for r in traj.records] == [2000] * 3 + [2001] * 3
    for country in mstar.row_labels:
        (_, a), (_, b) = traj.series(country)
        assert a == b
    assert traj.mean_ln_fitness[2000] == traj.mean_ln_fitness[2001]


def test_gaining_a_product_raises_fitness(mstar):
    later = BipartiteMatrix(np.ones((3, 3), dtype=int), mstar.row_labels, mstar.col_labels)
    traj = trajectories([(2000, _dummy(mstar)), (2001, _dummy(later))])
    (_, before), (_, after) = traj.series("c3")
    assert after > before


def test_trajectories_with_income(mstar):
    res = _dummy(mstar)
    traj = trajectories([(2000, res)], income={("c1", 2000): math.e, ("c2", 2000): -1.0})
    by = {r.country: r for r in traj.records}
    assert by["c1"].ln_income == pytest.approx(1.0)
    assert by["c2"].ln_income is None and by["c3"].ln_income is None


def test_trajectories_reject_mixed_gauges(mstar):
    with pytest.raises(GaugeMismatch):
        trajectories([(2000, fc_solve(mstar)), (2001, _dummy(mstar))])


def test_trajectories_skip_absent_and_vanished(mstar):
    other = BipartiteMatrix([[1, 1], [1, 0]], ["c1", "c9"], ["p1", "p2"])
    traj = trajectories([(2000, _dummy(mstar)), (2001, _dummy(other))])
    countries_2001 = {r.country for r in traj.records if r.year == 2001}
    assert "c2" not in countries_2001 and "c1" in countries_2001
