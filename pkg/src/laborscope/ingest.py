"""Long-form employment CSV ingestion.

Parses region/occupation/employment rows, reconciles region codes across
years through an explicit crosswalk table, and restricts to regions that
appear in every requested year before matrix construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from . import cache
from ._io import open_output
from .exceptions import ConfigError, DataError
from .matrix import RegionOccupationMatrix

# Values treated as suppressed/withheld employment cells; rows carrying one
# are dropped and counted rather than treated as parse errors.
DEFAULT_SUPPRESSED = ("**", "#", "")


@dataclass(frozen=True)
class ColumnMap:
    """Maps logical fields to CSV header names.

    ``year`` may be None for single-year files; pass a fixed year to
    parse_csv instead.
    """

    region_code: str = "region_code"
    region_name: str = "region_name"
    occupation_code: str = "occupation_code"
    occupation_name: str = "occupation_name"
    employment: str = "employment"
    year: str | None = "year"

    @classmethod
    def oes(cls) -> "ColumnMap":
        """Header names used by the public OES research downloads."""
        return cls(region_code="AREA", region_name="AREA_TITLE",
                   occupation_code="OCC_CODE", occupation_name="OCC_TITLE",
                   employment="TOT_EMP", year=None)


@dataclass(frozen=True)
class EmploymentRecord:
    region_code: str
    region_name: str
    occupation_code: str
    occupation_name: str
    year: int
    employment: float

    def __post_init__(self):
        if self.employment < 0:
            raise DataError(f"negative employment {self.employment!r} for "
                            f"({self.region_code}, {self.occupation_code}, {self.year})")

    @property
    def key(self) -> tuple[str, str, int]:
        return (self.region_code, self.occupation_code, self.year)


@dataclass(frozen=True)
class Crosswalk:
    """(year, old_code) -> canonical_code region recoding table."""

    entries: tuple[tuple[int, str, str], ...]

    def __post_init__(self):
        entries = tuple((int(y), str(o), str(c)) for y, o, c in self.entries)
        seen: dict[tuple[int, str], str] = {}
        for year, old, canon in entries:
            prev = seen.get((year, old))
            if prev is not None and prev != canon:
                raise DataError(f"crosswalk maps ({year}, {old}) to both "
                                f"{prev} and {canon}")
            seen[(year, old)] = canon
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "_map", seen)

    def canonical(self, year: int, code: str) -> str:
        return self._map.get((int(year), str(code)), str(code))

    def __len__(self) -> int:
        return len(self._map)

    @classmethod
    def load_csv(cls, path) -> "Crosswalk":
        df = pd.read_csv(path, dtype=str).fillna("")
        for col in ("year", "old_code", "canonical_code"):
            if col not in df.columns:
                raise ConfigError(f"{path}: crosswalk is missing column {col!r}")
        try:
            years = df["year"].astype(int)
        except ValueError as exc:
            raise DataError(f"{path}: unreadable year in crosswalk: {exc}") from None
        return cls(tuple(zip(years, df["old_code"], df["canonical_code"])))

    def save_csv(self, path) -> None:
        with open_output(path) as fh:
            fh.write("year,old_code,canonical_code\n")
            for year, old, canon in self.entries:
                fh.write(f"{year},{old},{canon}\n")


@dataclass(frozen=True)
class EmploymentTable:
    """Immutable record set with lexicographic region/occupation indices."""

    records: tuple[EmploymentRecord, ...]
    regions: tuple[str, ...] = field(init=False)
    occupations: tuple[str, ...] = field(init=False)
    years: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        records = tuple(sorted(self.records, key=lambda r: (r.year, r.region_code,
                                                            r.occupation_code)))
        seen: set[tuple[str, str, int]] = set()
        for rec in records:
            if rec.key in seen:
                raise DataError(f"duplicate record for {rec.key}")
            seen.add(rec.key)
        object.__setattr__(self, "records", records)
        object.__setattr__(self, "regions",
                           tuple(sorted({r.region_code for r in records})))
        object.__setattr__(self, "occupations",
                           tuple(sorted({r.occupation_code for r in records})))
        object.__setattr__(self, "years",
                           tuple(sorted({r.year for r in records})))

    def __len__(self) -> int:
        return len(self.records)

    # ---------------------------------------------------------------- I/O

    def save_csv(self, path) -> None:
        with open_output(path) as fh:
            fh.write("region_code,region_name,occupation_code,"
                     "occupation_name,year,employment\n")
            for r in self.records:
                name = r.region_name.replace('"', "'")
                oname = r.occupation_name.replace('"', "'")
                fh.write(f'{r.region_code},"{name}",{r.occupation_code},'
                         f'"{oname}",{r.year},{r.employment!r}\n')

    @classmethod
    def load_csv(cls, path) -> "EmploymentTable":
        result = parse_csv(path, ColumnMap())
        if result.errors:
            line, msg = result.errors[0]
            raise DataError(f"{path}:{line}: {msg}")
        return result.table

    def save_cache(self, path) -> None:
        cache.write_cache(
            path, "table", {"n_records": len(self.records)},
            [
                ("region_code", "str", [r.region_code for r in self.records]),
                ("region_name", "str", [r.region_name for r in self.records]),
                ("occupation_code", "str", [r.occupation_code for r in self.records]),
                ("occupation_name", "str", [r.occupation_name for r in self.records]),
                ("year", "int64", [r.year for r in self.records]),
                ("employment", "float64", [r.employment for r in self.records]),
            ])

    @classmethod
    def load_cache(cls, path) -> "EmploymentTable":
        _, _, data = cache.read_cache(path, expect_payload="table")
        records = tuple(
            EmploymentRecord(rc, rn, oc, on, int(y), float(e))
            for rc, rn, oc, on, y, e in zip(
                data["region_code"], data["region_name"],
                data["occupation_code"], data["occupation_name"],
                data["year"], data["employment"]))
        return cls(records)

    def save(self, path) -> None:
        if str(path).endswith(".lscope"):
            self.save_cache(path)
        else:
            self.save_csv(path)

    @classmethod
    def load(cls, path) -> "EmploymentTable":
        if cache.is_cache_file(path):
            return cls.load_cache(path)
        return cls.load_csv(path)


@dataclass(frozen=True)
class ParseResult:
    table: EmploymentTable
    n_suppressed: int
    errors: tuple[tuple[int, str], ...]


def _parse_float(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        return float("nan")


def parse_csv(path, colmap: ColumnMap | None = None,
              suppressed: tuple[str, ...] = DEFAULT_SUPPRESSED,
              year: int | None = None) -> ParseResult:
    """Parse a long-form employment CSV into an EmploymentTable.

    Rows whose employment cell matches a suppression marker are dropped
    and counted.  Rows with unreadable numbers are collected as
    (line, message) errors; parsing aborts only if more than half of the
    data rows fail.

    Parameters
    ----------
    path : CSV file with a header row.
    colmap : header-name mapping; defaults to the canonical column names.
    suppressed : employment cell values treated as withheld data.
    year : fixed year for files without a year column (colmap.year None).
    """
    colmap = colmap or ColumnMap()
    path = Path(path)
    if not path.exists():
        raise DataError(f"input file not found: {path}")
    if colmap.year is None and year is None:
        raise ConfigError("column map has no year column; pass a fixed year")

    df = pd.read_csv(path, dtype=str, keep_default_na=False)
    needed = [colmap.region_code, colmap.region_name, colmap.occupation_code,
              colmap.occupation_name, colmap.employment]
    if colmap.year is not None:
        needed.append(colmap.year)
    for col in needed:
        if col not in df.columns:
            raise ConfigError(f"{path}: missing column {col!r} "
                              f"(header has {list(df.columns)})")

    emp_raw = df[colmap.employment].str.strip()
    is_suppressed = emp_raw.isin(suppressed)
    n_suppressed = int(is_suppressed.sum())

    # thousands separators appear in published extracts; float() rather
    # than pd.to_numeric because the latter is not correctly rounded, which
    # would break bit-exact save/load round trips
    emp = emp_raw.str.replace(",", "", regex=False).map(_parse_float)
    if colmap.year is not None:
        years = pd.to_numeric(df[colmap.year].str.strip(), errors="coerce")
    else:
        years = pd.Series(float(year), index=df.index)

    errors: list[tuple[int, str]] = []
    bad = pd.Series(False, index=df.index)
    for idx in df.index[~is_suppressed & emp.isna()]:
        errors.append((idx + 2, f"unreadable employment value "
                                f"{emp_raw.iloc[idx]!r}"))
        bad.iloc[idx] = True
    for idx in df.index[years.isna()]:
        errors.append((idx + 2, f"unreadable year value "
                                f"{df[colmap.year].iloc[idx]!r}"))
        bad.iloc[idx] = True
    for idx in df.index[~is_suppressed & ~bad & (emp < 0)]:
        errors.append((idx + 2, f"negative employment {emp.iloc[idx]!r}"))
        bad.iloc[idx] = True
    errors.sort()

    n_rows = len(df)
    if n_rows and len({line for line, _ in errors}) * 2 > n_rows:
        raise DataError(f"{path}: {len(errors)} of {n_rows} rows failed to "
                        f"parse; first: line {errors[0][0]}: {errors[0][1]}")

    keep = ~is_suppressed & ~bad
    records = tuple(
        EmploymentRecord(
            region_code=str(df[colmap.region_code].iloc[i]).strip(),
            region_name=str(df[colmap.region_name].iloc[i]).strip(),
            occupation_code=str(df[colmap.occupation_code].iloc[i]).strip(),
            occupation_name=str(df[colmap.occupation_name].iloc[i]).strip(),
            year=int(years.iloc[i]),
            employment=float(emp.iloc[i]),
        )
        for i in df.index[keep])
    return ParseResult(EmploymentTable(records), n_suppressed, tuple(errors))


def apply_crosswalk(table: EmploymentTable, xwalk: Crosswalk) -> EmploymentTable:
    """Recode region codes through the crosswalk; merged keys are summed.

    Codes without an entry pass through unchanged.  When several source
    regions collapse onto one canonical code, their employments add and the
    canonical record keeps the name of the lexicographically smallest
    source code (or of the record already carrying the canonical code).
    """
    Key = tuple[str, str, int]
    merged: dict[Key, float] = {}
    region_names: dict[Key, tuple[int, str, str]] = {}
    occ_names: dict[Key, str] = {}
    for rec in table.records:
        canon = xwalk.canonical(rec.year, rec.region_code)
        key = (canon, rec.occupation_code, rec.year)
        merged[key] = merged.get(key, 0.0) + rec.employment
        # prefer the name attached to the canonical code itself
        rank = (0 if rec.region_code == canon else 1, rec.region_code, rec.region_name)
        if key not in region_names or rank < region_names[key]:
            region_names[key] = rank
        occ_names.setdefault(key, rec.occupation_name)
    records = tuple(
        EmploymentRecord(region, region_names[key][2], occ, occ_names[key], yr, emp)
        for key, emp in merged.items()
        for region, occ, yr in [key])
    return EmploymentTable(records)


def restrict_consistent(table: EmploymentTable, years) -> EmploymentTable:
    """Keep only regions that have at least one record in every given year."""
    years = tuple(sorted({int(y) for y in years}))
    if not years:
        raise ConfigError("restrict_consistent needs a nonempty year set")
    present: dict[int, set[str]] = {y: set() for y in years}
    for rec in table.records:
        if rec.year in present:
            present[rec.year].add(rec.region_code)
    consistent = set(table.regions)
    for y in years:
        consistent &= present[y]
    if not consistent:
        raise DataError(f"no regions appear in all of the years {years}")
    return EmploymentTable(tuple(r for r in table.records
                                 if r.region_code in consistent))


def to_matrix(table: EmploymentTable, year: int) -> RegionOccupationMatrix:
    """Dense employment matrix for one year, zeros where no record exists."""
    year = int(year)
    if year not in table.years:
        raise DataError(f"year {year} not present in table (has {table.years})")
    row = {code: i for i, code in enumerate(table.regions)}
    col = {code: j for j, code in enumerate(table.occupations)}
    values = np.zeros((len(table.regions), len(table.occupations)))
    for rec in table.records:
        if rec.year == year:
            values[row[rec.region_code], col[rec.occupation_code]] = rec.employment
    return RegionOccupationMatrix(values, table.regions, table.occupations, "raw")
