import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from binclust.data import (
    Categorical,
    Continuous,
    DataError,
    Dataset,
    MissingValueError,
    column_sd,
    load_csv,
    parse_kinds,
    read_labels,
    write_csv,
    write_labels,
)


def _write(tmp_path, text, name="d.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_load_numeric_table(tmp_path):
    path = _write(tmp_path, "a,b\n1.5,2.25\n0.1,3.7\n-4,5.5\n2.2,8.125\n")
    ds = load_csv(path)
    assert (ds.n, ds.J) == (4, 2)
    assert ds.kinds == (Continuous(), Continuous())
    assert ds.names == ("a", "b")
    assert ds.values[2, 0] == -4.0


def test_binary_column_inferred_categorical(tmp_path):
    path = _write(tmp_path, "x,y\n0,1.5\n1,2.5\n0,3.5\n1,4.25\n")
    ds = load_csv(path)
    assert ds.kinds[0] == Categorical(2)
    assert ds.inferred == (True, True)
    assert ds.is_continuous(1)


def test_inferred_levels_are_recoded(tmp_path):
    ds = load_csv(_write(tmp_path, "x\n3\n7\n3\n5\n"))
    assert ds.kinds[0] == Categorical(3)
    assert ds.column(0).tolist() == [0, 2, 0, 1]


def test_more_than_ten_integer_values_is_continuous(tmp_path):
    body = "\n".join(str(v) for v in range(11))
    assert load_csv(_write(tmp_path, "x\n" + body + "\n")).kinds[0] == Continuous()


@pytest.mark.parametrize("token", ["NA", "", "nan", "?", "NULL"])
def test_missing_value_is_an_error(tmp_path, token):
    with pytest.raises(MissingValueError):
        load_csv(_write(tmp_path, f"a,b\n1,2\n{token},3\n"))


def test_ragged_and_non_numeric_rows(tmp_path):
    with pytest.raises(DataError):
        load_csv(_write(tmp_path, "a,b\n1,2\n3\n"))
    with pytest.raises(DataError):
        load_csv(_write(tmp_path, "a,b\n1,2\nx,3\n"))
    with pytest.raises(DataError):
        load_csv(_write(tmp_path, ""))


def test_kind_override(tmp_path):
    path = _write(tmp_path, "a,b,c\n0,1,2.5\n1,0,3.5\n2,1,1.0\n")
    ds = load_csv(path, "k3,c,c")
    assert ds.kinds == (Categorical(3), Continuous(), Continuous())
    assert ds.inferred == (False, False, False)
    with pytest.raises(DataError):
        load_csv(path, "k2,c,c")  # code 2 outside [0, 2)
    with pytest.raises(DataError):
        load_csv(path, "c,c")


def test_parse_kinds():
    assert parse_kinds("c, k4") == [Continuous(), Categorical(4)]
    with pytest.raises(ValueError):
        parse_kinds("q")
    with pytest.raises(ValueError):
        Categorical(1)


def test_dataset_rejects_nan_and_is_read_only():
    with pytest.raises(MissingValueError):
        Dataset.from_array([[1.0, np.nan]])
    ds = Dataset.from_array([[1.0, 2.0]])
    with pytest.raises(ValueError):
        ds.values[0, 0] = 3.0


@pytest.mark.parametrize(
    "col, expected",
    [((1, 1, 1, 1), 0.0), ((0, 2), math.sqrt(2)), ((1, 2, 3, 4), 1.2909944487358056)],
)
def test_column_sd(col, expected):
    assert column_sd(Dataset.from_array(np.array(col, float)[:, None]), 0) == pytest.approx(expected, abs=1e-12)


def test_column_sd_errors():
    with pytest.raises(DataError):
        column_sd(Dataset.from_array([[1.0]]), 0)
    ds = Dataset.from_array([[0.0], [1.0]], kinds=[Categorical(2)])
    with pytest.raises(DataError):
        column_sd(ds, 0)


@given(
    st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=1, max_size=15),
    st.lists(st.integers(0, 3), min_size=15, max_size=15),
)
def test_csv_round_trip(tmp_path_factory, xs, codes):
    n = len(xs)
    ds = Dataset(np.column_stack([xs, codes[:n]]), (Continuous(), Categorical(4)), ("x", "g"))
    path = tmp_path_factory.mktemp("rt") / "d.csv"
    write_csv(ds, path)
    back = load_csv(path, ds.kinds)
    assert np.array_equal(back.values, ds.values)
    assert back.kinds == ds.kinds


@given(st.lists(st.integers(-3, 3), min_size=2, max_size=30), st.randoms())
def test_inference_depends_only_on_multiset(tmp_path_factory, xs, rnd):
    shuffled = list(xs)
    rnd.shuffle(shuffled)
    d = tmp_path_factory.mktemp("inf")
    a = load_csv(_write(d, "x\n" + "\n".join(map(str, xs)) + "\n", "a.csv"))
    b = load_csv(_write(d, "x\n" + "\n".join(map(str, shuffled)) + "\n", "b.csv"))
    assert a.kinds == b.kinds


def test_labels_round_trip(tmp_path):
    write_labels([0, 2, 1], tmp_path / "l.csv")
    assert read_labels(tmp_path / "l.csv").tolist() == [0, 2, 1]
