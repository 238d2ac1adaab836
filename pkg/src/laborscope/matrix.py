"""Dense region x occupation matrices with ordered labels.

The same container holds raw employment counts (kind="raw") and
frequency-weighted scores (kind="tfidf"); the kind tag keeps the two from
being mixed up downstream.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import cache
from ._io import fmt, open_output
from .exceptions import DataError
from .validation import as_float_matrix, check_labels_match, check_nonnegative

KINDS = ("raw", "tfidf")


@dataclass(frozen=True)
class RegionOccupationMatrix:
    """Nonnegative R x O matrix; rows are regions, columns occupations."""

    values: np.ndarray
    region_labels: tuple[str, ...]
    occupation_labels: tuple[str, ...]
    kind: str = "raw"

    def __post_init__(self):
        values = as_float_matrix(self.values, "matrix values")
        check_nonnegative(values, "matrix values")
        object.__setattr__(self, "values", values)
        object.__setattr__(
            self, "region_labels",
            check_labels_match(self.region_labels, values.shape[0], "region labels"))
        object.__setattr__(
            self, "occupation_labels",
            check_labels_match(self.occupation_labels, values.shape[1], "occupation labels"))
        if self.kind not in KINDS:
            raise DataError(f"unknown matrix kind {self.kind!r}; expected one of {KINDS}")

    @property
    def n_regions(self) -> int:
        return self.values.shape[0]

    @property
    def n_occupations(self) -> int:
        return self.values.shape[1]

    def region_index(self, code: str) -> int:
        try:
            return self.region_labels.index(str(code))
        except ValueError:
            raise DataError(f"unknown region code {code!r}") from None

    def row(self, code: str) -> np.ndarray:
        return self.values[self.region_index(code)]

    def with_values(self, values: np.ndarray, kind: str | None = None) -> "RegionOccupationMatrix":
        return replace(self, values=values, kind=kind or self.kind)

    # ---------------------------------------------------------------- I/O

    def save_csv(self, path) -> None:
        """CSV with a `# kind=` comment line, region codes in the first
        column and occupation codes across the header."""
        with open_output(path) as fh:
            fh.write(f"# kind={self.kind}\n")
            fh.write("region_code," + ",".join(self.occupation_labels) + "\n")
            for code, row in zip(self.region_labels, self.values):
                fh.write(code + "," + ",".join(fmt(v) for v in row) + "\n")

    @classmethod
    def load_csv(cls, path, kind: str | None = None) -> "RegionOccupationMatrix":
        path = Path(path)
        with open(path, "r", encoding="utf-8") as fh:
            first = fh.readline().strip()
            file_kind = "raw"
            if first.startswith("#"):
                if "kind=" in first:
                    file_kind = first.split("kind=", 1)[1].strip()
                header = fh.readline().strip()
            else:
                header = first
            cols = header.split(",")
            if not cols or cols[0] != "region_code":
                raise DataError(f"{path}: matrix CSV must start with a region_code column")
            occupations = cols[1:]
            regions, rows = [], []
            for line in fh:
                line = line.rstrip("\n")
                if not line:
                    continue
                parts = line.split(",")
                if len(parts) != len(cols):
                    raise DataError(f"{path}: row for {parts[0]!r} has "
                                    f"{len(parts) - 1} values, expected {len(occupations)}")
                regions.append(parts[0])
                try:
                    rows.append([float(v) for v in parts[1:]])
                except ValueError as exc:
                    raise DataError(f"{path}: unreadable value in row "
                                    f"{parts[0]!r}: {exc}") from None
        values = np.array(rows, dtype=np.float64).reshape(len(regions), len(occupations))
        return cls(values, tuple(regions), tuple(occupations), kind or file_kind)

    def save_cache(self, path) -> None:
        cache.write_cache(
            path, "matrix",
            {"kind": self.kind, "shape": list(self.values.shape)},
            [
                ("region_labels", "str", self.region_labels),
                ("occupation_labels", "str", self.occupation_labels),
                ("values", "float64", self.values.ravel()),
            ])

    @classmethod
    def load_cache(cls, path) -> "RegionOccupationMatrix":
        _, meta, data = cache.read_cache(path, expect_payload="matrix")
        shape = tuple(meta["shape"])
        return cls(np.asarray(data["values"]).reshape(shape),
                   tuple(data["region_labels"]),
                   tuple(data["occupation_labels"]),
                   meta.get("kind", "raw"))

    def save(self, path) -> None:
        if str(path).endswith(".lscope"):
            self.save_cache(path)
        else:
            self.save_csv(path)

    @classmethod
    def load(cls, path, kind: str | None = None) -> "RegionOccupationMatrix":
        if cache.is_cache_file(path):
            m = cls.load_cache(path)
            return replace(m, kind=kind) if kind else m
        return cls.load_csv(path, kind=kind)
