import pytest
from hypothesis import given
from hypothesis import strategies as st

from binclust.metrics import ConfusionCounts, ari, selection_table, sensitivity, specificity
from oracles import ari_pairs


def test_identical_partitions():
    assert ari([0, 0, 1, 1, 2], [5, 5, 7, 7, 9]) == 1.0


def test_single_cluster_side_gives_zero():
    assert ari([0, 0, 0, 0, 0, 0], [0, 1, 0, 1, 2, 2]) == 0.0
    assert ari([3, 1, 2, 0], [7, 7, 7, 7]) == 0.0


def test_both_single_cluster_is_one():
    assert ari([1, 1, 1], [0, 0, 0]) == 1.0


def test_six_point_example():
    a, b = [0, 0, 1, 1, 2, 2], [0, 0, 1, 2, 2, 2]
    # pair walk: 2 pairs together in both, 1 only in a, 2 only in b, 10 in neither
    assert ari(a, b) == pytest.approx(4 / 9, abs=1e-15)
    assert ari(a, b) == pytest.approx(ari_pairs(a, b), abs=1e-12)


def test_errors():
    with pytest.raises(ValueError):
        ari([0, 1], [0, 1, 1])
    with pytest.raises(ValueError):
        ari([0], [0])


def test_confusion_counts_sum():
    cc = ConfusionCounts.from_labels([0, 1, 1, 2], ["a", "a", "b", "b"])
    assert cc.table.sum() == cc.n == 4
    assert cc.rows.tolist() == [1, 2, 1]


labels = st.lists(st.integers(0, 3), min_size=2, max_size=12)


@given(labels, st.data())
def test_ari_matches_pair_enumeration(a, data):
    b = data.draw(st.lists(st.integers(0, 3), min_size=len(a), max_size=len(a)))
    assert ari(a, b) == pytest.approx(ari_pairs(a, b), abs=1e-12)
    assert ari(a, b) == ari(b, a)


@given(labels, st.permutations([0, 1, 2, 3]))
def test_ari_relabel_invariance(a, perm):
    b = [perm[x] for x in a]
    relabelled = [(x + 1) % 4 for x in a]
    assert ari(a, b) == 1.0
    assert ari(relabelled, a) == 1.0


def test_sensitivity_specificity_examples():
    truth = range(6)
    assert sensitivity(range(6), truth) == 1.0 and specificity(range(6), truth, 20) == 1.0
    assert sensitivity(range(20), truth) == 1.0 and specificity(range(20), truth, 20) == 0.0
    # 1-based {1,2,3,7} is 0-based {0,1,2,6}
    assert sensitivity([0, 1, 2, 6], truth) == 0.5
    assert specificity([0, 1, 2, 6], truth, 20) == pytest.approx(13 / 14)


def test_sensitivity_specificity_errors():
    with pytest.raises(ValueError):
        sensitivity([1], [])
    with pytest.raises(ValueError):
        specificity([1], range(4), 4)


@given(st.sets(st.integers(0, 19)), st.integers(6, 19))
def test_extra_irrelevant_variable(selected, extra):
    truth = set(range(6))
    base = selected - {extra}
    assert 0 <= sensitivity(base, truth) <= 1 and 0 <= specificity(base, truth, 20) <= 1
    assert sensitivity(base | {extra}, truth) == sensitivity(base, truth)
    assert specificity(base | {extra}, truth, 20) < specificity(base, truth, 20)


def test_selection_table():
    tab = selection_table([2, 2, 2], 4)
    assert tab.probabilities == {1: 0.0, 2: 1.0, 3: 0.0, 4: 0.0}
    tab = selection_table([2, 3, 3, 4], 4, k_true=3)
    assert (tab.true_rate, tab.over_rate) == (0.5, 0.25)
    assert tab.probabilities[1] == 0.0
    assert selection_table([1, 2, 2], 3).probabilities[2] == 0.667
    assert "Tr." in tab.format()
    with pytest.raises(ValueError):
        selection_table([], 3)
