import numpy as np
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from fitsink.ranking import ascending_order, descending_order, pearson, rank_vector, spearman, tie_groups


def test_tie_groups_merge_near_equal_values():
    assert tie_groups([1.0, 1.0 + 1e-12, 2.0]).tolist() == [0, 0, 1]
    assert tie_groups([3.0, 1.0, 2.0]).tolist() == [2, 0, 1]


def test_rank_vector_averages_ties():
    assert rank_vector([0.6, 1.2, 1.2]).tolist() == [1.0, 2.5, 2.5]


def test_orders_break_ties_by_label():
    labels = ["b", "a", "c"]
    assert descending_order([1.0, 1.0, 0.5], labels).tolist() == [1, 0, 2]
    assert ascending_order([1.0, 1.0, 0.5], labels).tolist() == [2, 1, 0]


def test_spearman_exact_extremes():
    x = [0.1, 0.5, 0.7, 2.0]
    assert spearman(x, [1, 2, 3, 4]) == 1.0
    assert spearman(x, [4, 3, 2, 1]) == -1.0
    assert spearman(x, [5, 5, 5, 5]) is None
    assert pearson(x, [1, 1, 1, 1]) is None


@given(st.lists(st.integers(-5, 5), min_size=3, max_size=12), st.lists(st.integers(-5, 5), min_size=3, max_size=12))
def test_spearman_matches_scipy_on_integers(a, b):
    k = min(len(a), len(b))
    a, b = np.array(a[:k], float), np.array(b[:k], float)
    ours = spearman(a, b)
    if len(set(a)) == 1 or len(set(b)) == 1:
        assert ours is None
    else:
        assert abs(ours - stats.spearmanr(a, b)[0]) < 1e-12
