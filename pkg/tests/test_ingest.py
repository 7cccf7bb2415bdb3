import math
import tempfile
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ggmcp.errors import Empty, Io, Malformed, NonPositivePrice, ZeroVariance
from ggmcp.ingest import (RawTable, clean_returns, load_csv, load_dataset, log_returns,
                          standardize, threshold, write_csv)


def _write(tmp_path, text, name="t.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_load_small_table(tmp_path):
    t = load_csv(_write(tmp_path, "a,b\n1,2\n3,4\n5,6\n"))
    assert (t.T, t.p, t.columns, t.dropped) == (3, 2, ("a", "b"), 0)
    assert t.positive


def test_blank_cell_row_dropped(tmp_path):
    t = load_csv(_write(tmp_path, "a,b\n1,2\n3,\n5,6\n"))
    assert t.T == 2 and t.dropped == 1
    assert np.array_equal(t.values, [[1, 2], [5, 6]])


def test_non_numeric_and_infinite_cells_dropped(tmp_path):
    t = load_csv(_write(tmp_path, "a,b\n1,x\n3,inf\n5,6\n"))
    assert t.T == 1 and t.dropped == 2


def test_headerless(tmp_path):
    t = load_csv(_write(tmp_path, "1,2\n3,4\n"), has_header=False)
    assert t.columns == ("x0", "x1") and t.T == 2


def test_header_only_is_empty(tmp_path):
    with pytest.raises(Empty):
        load_csv(_write(tmp_path, "a,b\n"))


def test_empty_file(tmp_path):
    with pytest.raises(Empty):
        load_csv(_write(tmp_path, ""))
    with pytest.raises(Empty):
        load_csv(_write(tmp_path, "", "u.csv"), has_header=False)


def test_ragged_is_malformed(tmp_path):
    with pytest.raises(Malformed):
        load_csv(_write(tmp_path, "a,b\n1,2\n3\n"))


def test_missing_file(tmp_path):
    with pytest.raises(Io):
        load_csv(tmp_path / "nope.csv")


def test_rawtable_shape_check():
    with pytest.raises(Malformed):
        RawTable(("a",), np.zeros((2, 2)))


# ---------------------------------------------------------------- cleaning

def test_log_returns_exact():
    R = log_returns(np.array([[1.0], [math.e], [math.e**3]]))
    assert np.allclose(R.ravel(), [1.0, 2.0])


def test_non_positive_price():
    with pytest.raises(NonPositivePrice):
        clean_returns(RawTable(("a",), np.array([[1.0], [0.0], [2.0]])))


def test_constant_price_is_zero_variance():
    with pytest.raises(ZeroVariance, match="a"):
        clean_returns(RawTable(("a", "b"), np.array([[2.0, 1.0], [2.0, 3.0], [2.0, 2.0]])))


def test_geometric_column_is_zero_variance():
    # returns [1, 1] centre to [0, 0]
    with pytest.raises(ZeroVariance):
        clean_returns(RawTable(("a",), np.array([[1.0], [math.e], [math.e**2]])))


def test_too_short():
    with pytest.raises(Empty):
        clean_returns(RawTable(("a",), np.array([[1.0], [2.0]])))


def test_outlier_clipped_to_three():
    Z = np.zeros((50, 1))
    Z[7] = 5.0
    Z[9] = -7.0
    out = threshold(Z)
    assert out[7, 0] == 3.0 and out[9, 0] == -3.0
    assert threshold(Z, drop_rows=True).shape == (48, 1)


def test_pipeline_clips_large_return():
    rng = np.random.default_rng(0)
    r = rng.normal(0, 0.01, 200)
    r[100] = 0.5
    prices = np.exp(np.cumsum(np.r_[0.0, r]))[:, None]
    d = clean_returns(RawTable(("a",), prices))
    assert d.T == 200 and d.X[100, 0] == 3.0
    assert np.all(np.abs(d.X) <= 3.0)


_walks = st.tuples(st.integers(0, 2**31), st.integers(100, 600), st.integers(1, 4))


@given(_walks)
def test_standardized_moments(args):
    seed, T, p = args
    rng = np.random.default_rng(seed)
    R = rng.normal(0, 0.02, (T, p))
    Z = standardize(R)
    assert np.all(np.abs(Z.mean(axis=0)) < 1e-10)
    assert np.allclose(Z.std(axis=0, ddof=1), 1.0)
    clipped = threshold(Z)
    assert np.all(np.abs(clipped.std(axis=0, ddof=1) - 1.0) <= 0.05)


@given(_walks)
def test_idempotent_on_clean_data(args):
    seed, T, p = args
    rng = np.random.default_rng(seed)
    Z = standardize(rng.normal(size=(T, p)))
    Z = Z[np.all(np.abs(Z) < 3.0, axis=1)]
    Z = standardize(Z)
    again = threshold(standardize(Z))
    inside = np.all(np.abs(Z) <= 3.0)
    if inside:
        assert np.allclose(again, Z, atol=1e-12)
    else:
        assert np.all(np.abs(again) <= 3.0)


# ---------------------------------------------------------------- round trip

@given(arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 4)),
              elements=st.floats(allow_nan=False, allow_infinity=False)))
def test_write_load_round_trip(X):
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "x.csv"
        write_csv(path, X)
        t = load_csv(path)
    assert t.T == X.shape[0] and np.array_equal(t.values, X)


def test_load_dataset_modes(tmp_path):
    path = _write(tmp_path, "a,b\n1,2\n2,3\n4,3\n3,5\n")
    assert load_dataset(path).T == 4
    assert load_dataset(path, prices=True).T == 3
    with pytest.raises(Empty):
        load_dataset(_write(tmp_path, "a\n1\n", "one.csv"))
