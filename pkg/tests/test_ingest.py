import numpy as np
import pytest

from helpers import make_table
from laborscope.exceptions import ConfigError, DataError
from laborscope.ingest import (
    ColumnMap,
    Crosswalk,
    EmploymentRecord,
    EmploymentTable,
    apply_crosswalk,
    parse_csv,
    restrict_consistent,
    to_matrix,
)

CSV = """region_code,region_name,occupation_code,occupation_name,year,employment
R2,"Beta",O1,"Welders",2014,120
R1,"Alpha",O1,"Welders",2014,"1,500"
R1,"Alpha",O2,"Nurses",2014,**
R1,"Alpha",O3,"Clerks",2014,abc
R1,"Alpha",O3,"Clerks",2015,40
"""


def test_parse_counts_suppressed_and_errors(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text(CSV)
    result = parse_csv(path)
    assert result.n_suppressed == 1
    assert len(result.errors) == 1
    line, msg = result.errors[0]
    assert line == 5 and "abc" in msg
    assert len(result.table) == 3


def test_parse_strips_thousands_separators(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text(CSV)
    table = parse_csv(path).table
    rec = [r for r in table.records if r.region_code == "R1" and r.year == 2014][0]
    assert rec.employment == 1500.0


def test_parse_aborts_when_most_rows_fail(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text(
        "region_code,region_name,occupation_code,occupation_name,year,employment\n"
        "R1,A,O1,X,2014,bad\n"
        "R2,B,O1,X,2014,worse\n"
        "R3,C,O1,X,2014,10\n")
    with pytest.raises(DataError, match="failed to parse"):
        parse_csv(path)


def test_parse_missing_column(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("region_code,year\nR1,2014\n")
    with pytest.raises(ConfigError, match="missing column"):
        parse_csv(path)


def test_parse_missing_file(tmp_path):
    with pytest.raises(DataError, match="not found"):
        parse_csv(tmp_path / "nope.csv")


def test_parse_fixed_year_for_yearless_files(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("region_code,region_name,occupation_code,"
                    "occupation_name,employment\nR1,A,O1,X,10\n")
    colmap = ColumnMap(year=None)
    with pytest.raises(ConfigError, match="fixed year"):
        parse_csv(path, colmap)
    table = parse_csv(path, colmap, year=2016).table
    assert table.years == (2016,)


def test_parse_oes_preset(tmp_path):
    path = tmp_path / "oes.csv"
    path.write_text("AREA,AREA_TITLE,OCC_CODE,OCC_TITLE,TOT_EMP\n"
                    "29820,\"Las Vegas\",11-1011,\"Chief Executives\",\"2,340\"\n"
                    "29820,\"Las Vegas\",35-3031,\"Waiters\",**\n")
    result = parse_csv(path, ColumnMap.oes(), year=2014)
    assert result.n_suppressed == 1
    rec = result.table.records[0]
    assert rec.region_code == "29820"
    assert rec.occupation_code == "11-1011"
    assert rec.employment == 2340.0


def test_parse_negative_employment_is_an_error(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("region_code,region_name,occupation_code,"
                    "occupation_name,year,employment\n"
                    "R1,A,O1,X,2014,-5\nR1,A,O2,X,2014,5\n")
    result = parse_csv(path)
    assert [line for line, _ in result.errors] == [2]
    assert len(result.table) == 1


def test_table_rejects_duplicate_keys():
    with pytest.raises(DataError, match="duplicate"):
        make_table([("R1", "O1", 2014, 5), ("R1", "O1", 2014, 7)])


def test_table_sorted_indices():
    table = make_table([("R2", "O2", 2015, 1), ("R1", "O1", 2014, 2)])
    assert table.regions == ("R1", "R2")
    assert table.occupations == ("O1", "O2")
    assert table.years == (2014, 2015)
    assert table.records[0].year == 2014


def test_table_csv_round_trip(tmp_path):
    table = make_table([("R1", "O1", 2014, 10.5), ("R2", "O1", 2014, 3.25)])
    path = tmp_path / "t.csv"
    table.save_csv(path)
    back = EmploymentTable.load_csv(path)
    assert back == table


def test_table_cache_round_trip(tmp_path):
    table = make_table([("R1", "O1", 2014, 10.5), ("R1", "O2", 2015, 0.0)])
    path = tmp_path / "t.lscope"
    table.save(path)
    assert EmploymentTable.load(path) == table


def test_crosswalk_functional_check():
    Crosswalk(((2014, "A", "B"), (2014, "A", "B")))  # repeat is fine
    with pytest.raises(DataError, match="both"):
        Crosswalk(((2014, "A", "B"), (2014, "A", "C")))


def test_crosswalk_lookup_passthrough():
    xw = Crosswalk(((2014, "OLD", "NEW"),))
    assert xw.canonical(2014, "OLD") == "NEW"
    assert xw.canonical(2015, "OLD") == "OLD"
    assert xw.canonical(2014, "OTHER") == "OTHER"


def test_crosswalk_csv_round_trip(tmp_path):
    xw = Crosswalk(((2014, "A", "B"), (2015, "C", "D")))
    path = tmp_path / "xw.csv"
    xw.save_csv(path)
    assert Crosswalk.load_csv(path) == xw


def test_apply_crosswalk_sums_merged_keys():
    table = make_table([("A", "O1", 2014, 10), ("B", "O1", 2014, 7),
                        ("C", "O1", 2014, 5)])
    xw = Crosswalk(((2014, "B", "A"),))
    out = apply_crosswalk(table, xw)
    assert out.regions == ("A", "C")
    merged = [r for r in out.records if r.region_code == "A"][0]
    assert merged.employment == 17.0


def test_apply_crosswalk_name_prefers_canonical_record():
    recs = (
        EmploymentRecord("A", "Canonical name", "O1", "X", 2014, 1.0),
        EmploymentRecord("B", "Other name", "O1", "X", 2014, 2.0),
    )
    out = apply_crosswalk(EmploymentTable(recs), Crosswalk(((2014, "B", "A"),)))
    assert out.records[0].region_name == "Canonical name"
    # without a record on the canonical code, smallest source code wins
    out2 = apply_crosswalk(
        EmploymentTable((
            EmploymentRecord("B", "From B", "O1", "X", 2014, 1.0),
            EmploymentRecord("C", "From C", "O1", "X", 2014, 2.0),
        )),
        Crosswalk(((2014, "B", "Z"), (2014, "C", "Z"),)))
    assert out2.records[0].region_name == "From B"


def test_restrict_consistent_is_region_set_intersection():
    table = make_table([
        ("R1", "O1", 2014, 1), ("R1", "O1", 2015, 1),
        ("R2", "O1", 2014, 1),
        ("R3", "O1", 2015, 1),
    ])
    out = restrict_consistent(table, [2014, 2015])
    assert out.regions == ("R1",)
    # surviving regions keep records in years outside the requested set
    table2 = make_table([
        ("R1", "O1", 2014, 1), ("R1", "O1", 2015, 1), ("R1", "O1", 2016, 9),
        ("R2", "O1", 2016, 1),
    ])
    out2 = restrict_consistent(table2, [2014, 2015])
    assert out2.years == (2014, 2015, 2016)


def test_restrict_consistent_errors():
    table = make_table([("R1", "O1", 2014, 1), ("R2", "O1", 2015, 1)])
    with pytest.raises(DataError, match="no regions"):
        restrict_consistent(table, [2014, 2015])
    with pytest.raises(ConfigError):
        restrict_consistent(table, [])


def test_to_matrix_matches_dict_fill(rng):
    entries = []
    expect = {}
    regions = [f"R{i}" for i in range(4)]
    occs = [f"O{j}" for j in range(5)]
    for r in regions:
        for o in occs:
            if rng.random() < 0.6:
                e = float(rng.integers(1, 100))
                entries.append((r, o, 2014, e))
                expect[(r, o)] = e
    table = make_table(entries)
    x = to_matrix(table, 2014)
    assert x.kind == "raw"
    for i, r in enumerate(table.regions):
        for j, o in enumerate(table.occupations):
            assert x.values[i, j] == expect.get((r, o), 0.0)


def test_to_matrix_unknown_year():
    table = make_table([("R1", "O1", 2014, 1)])
    with pytest.raises(DataError, match="2015"):
        to_matrix(table, 2015)
