import numpy as np
import pytest

from helpers import make_matrix
from laborscope.exceptions import DataError
from laborscope.matrix import RegionOccupationMatrix


def test_construction_validates():
    with pytest.raises(DataError):
        make_matrix([[-1.0]])
    with pytest.raises(DataError):
        RegionOccupationMatrix(np.ones((2, 2)), ("R1",), ("O1", "O2"), "raw")
    with pytest.raises(DataError):
        make_matrix([[1.0]], kind="weird")


def test_row_and_region_index():
    x = make_matrix([[1.0, 2.0], [3.0, 4.0]])
    assert x.region_index("R01") == 1
    assert list(x.row("R01")) == [3.0, 4.0]
    with pytest.raises(DataError):
        x.row("nope")


def test_with_values_changes_kind():
    x = make_matrix([[1.0, 2.0]])
    y = x.with_values(np.array([[5.0, 6.0]]), kind="tfidf")
    assert y.kind == "tfidf"
    assert x.kind == "raw"
    assert y.region_labels == x.region_labels


def test_csv_round_trip_exact(tmp_path, rng):
    values = rng.uniform(0, 1000, size=(4, 6))
    values[0, 0] = 0.0
    x = make_matrix(values, kind="tfidf")
    path = tmp_path / "m.csv"
    x.save_csv(path)
    y = RegionOccupationMatrix.load_csv(path)
    assert y.kind == "tfidf"
    assert y.region_labels == x.region_labels
    assert y.occupation_labels == x.occupation_labels
    # repr-formatted floats parse back bit-for-bit
    assert np.array_equal(y.values, x.values)


def test_csv_kind_comment(tmp_path):
    x = make_matrix([[1.0]])
    path = tmp_path / "m.csv"
    x.save_csv(path)
    first = path.read_text().splitlines()[0]
    assert first == "# kind=raw"


def test_csv_bad_header(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("foo,bar\n1,2\n")
    with pytest.raises(DataError):
        RegionOccupationMatrix.load_csv(path)


def test_csv_ragged_row(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("region_code,O1,O2\nR1,1.0\n")
    with pytest.raises(DataError):
        RegionOccupationMatrix.load_csv(path)


def test_cache_round_trip_exact(tmp_path, rng):
    x = make_matrix(rng.uniform(0, 10, size=(3, 5)))
    path = tmp_path / "m.lscope"
    x.save_cache(path)
    y = RegionOccupationMatrix.load_cache(path)
    assert np.array_equal(y.values, x.values)
    assert y.kind == x.kind
    assert y.occupation_labels == x.occupation_labels


def test_save_load_dispatch_on_suffix_and_magic(tmp_path):
    x = make_matrix([[1.5, 2.5]])
    cache_path = tmp_path / "m.lscope"
    csv_path = tmp_path / "m.csv"
    x.save(cache_path)
    x.save(csv_path)
    assert cache_path.read_bytes()[:7] == b"LSCOPE1"
    for p in (cache_path, csv_path):
        y = RegionOccupationMatrix.load(p)
        assert np.array_equal(y.values, x.values)
