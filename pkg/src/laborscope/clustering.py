"""Hierarchical clustering of regions by cosine distance between their
topical compositions.

Agglomeration is implemented directly (Lance-Williams updates) so that
tie-breaking is fully specified: among equally close pairs, the one with
the lexicographically smallest (min id, max id) key merges first.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ._io import fmt, open_output
from .exceptions import ConfigError, DataError, NumericError
from .dynamics import cosine_similarity
from .ingest import EmploymentTable
from .topics import RegionComposition
from .validation import check_distance_matrix

LINKAGES = ("average", "complete", "single")


@dataclass(frozen=True)
class Dendrogram:
    """Merge history over R leaves: ids 0..R-1 are leaves, each merge
    creates the next id, so the root is 2R-2."""

    merges: tuple[tuple[int, int, float, int], ...]
    leaf_labels: tuple[str, ...]
    linkage: str

    def __post_init__(self):
        if self.linkage not in LINKAGES:
            raise ConfigError(f"linkage must be one of {LINKAGES}, "
                              f"got {self.linkage!r}")
        n = len(self.leaf_labels)
        if len(self.merges) != n - 1:
            raise DataError(f"{n} leaves require {n - 1} merges, "
                            f"got {len(self.merges)}")
        if self.linkage in ("average", "complete"):
            heights = [h for _, _, h, _ in self.merges]
            for prev, cur in zip(heights, heights[1:]):
                if cur < prev - 1e-12:
                    raise NumericError(f"height inversion {prev} -> {cur} "
                                       f"under {self.linkage} linkage")

    @property
    def n_leaves(self) -> int:
        return len(self.leaf_labels)

    def leaf_order(self) -> tuple[int, ...]:
        """Left-to-right leaf indices of the drawn tree."""
        order: dict[int, tuple[int, ...]] = {i: (i,) for i in range(self.n_leaves)}
        for a, b, _, m in self.merges:
            order[m] = order[a] + order[b]
        return order[self.merges[-1][3]] if self.merges else tuple(range(self.n_leaves))

    def to_newick(self) -> str:
        """Newick string with branch lengths (parent height - child height)."""
        height = {i: 0.0 for i in range(self.n_leaves)}
        text = {i: label for i, label in enumerate(self.leaf_labels)}
        for a, b, h, m in self.merges:
            height[m] = h
            text[m] = (f"({text[a]}:{fmt(h - height[a])},"
                       f"{text[b]}:{fmt(h - height[b])})")
        root = self.merges[-1][3] if self.merges else 0
        return text[root] + ";"


def cosine_distance_matrix(compositions: list[RegionComposition]) -> np.ndarray:
    """Symmetric matrix of 1 - cosine(w_i, w_j) over composition vectors."""
    if len(compositions) < 2:
        raise DataError(f"need at least 2 regions, got {len(compositions)}")
    for c in compositions:
        if c.is_zero or not any(c.weights):
            raise DataError(f"region {c.region_code} has an all-zero "
                            f"composition; distance undefined")
    rows = [np.asarray(c.weights) for c in compositions]
    n = len(rows)
    d = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            dist = 1.0 - cosine_similarity(rows[i], rows[j])
            d[i, j] = d[j, i] = max(0.0, dist)
    return d


def hierarchical_cluster(d: np.ndarray, linkage: str = "average",
                         labels=None) -> Dendrogram:
    """Agglomerative clustering of a distance matrix.

    Leaves are 0..R-1 in input order; merge t creates cluster R+t.  Exact
    distance ties merge the lexicographically smallest (min id, max id)
    pair, which makes the output deterministic.
    """
    if linkage not in LINKAGES:
        raise ConfigError(f"linkage must be one of {LINKAGES}, got {linkage!r}")
    d = check_distance_matrix(d)
    n = d.shape[0]
    if n < 2:
        raise DataError(f"need at least 2 points, got {n}")
    if labels is None:
        labels = tuple(str(i) for i in range(n))
    labels = tuple(str(c) for c in labels)
    if len(labels) != n:
        raise DataError(f"{len(labels)} labels for {n} points")

    total = 2 * n - 1
    big = np.full((total, total), np.inf)
    big[:n, :n] = d
    np.fill_diagonal(big, np.inf)
    sizes = np.zeros(total, dtype=np.int64)
    sizes[:n] = 1

    merges = []
    for step in range(n - 1):
        # row-major argmin lands on the upper-triangle copy of the closest
        # pair, so ties resolve to the smallest (min id, max id) key
        flat = int(np.argmin(big))
        a, b = divmod(flat, total)
        a, b = (a, b) if a < b else (b, a)
        h = float(big[a, b])
        m = n + step
        sa, sb = sizes[a], sizes[b]
        if linkage == "average":
            new_row = (sa * big[a, :m] + sb * big[b, :m]) / (sa + sb)
        elif linkage == "complete":
            new_row = np.maximum(big[a, :m], big[b, :m])
        else:
            new_row = np.minimum(big[a, :m], big[b, :m])
        new_row[a] = new_row[b] = np.inf
        big[m, :m] = new_row
        big[:m, m] = new_row
        big[a, :] = big[:, a] = np.inf
        big[b, :] = big[:, b] = np.inf
        sizes[m] = sa + sb
        merges.append((a, b, h, m))
    return Dendrogram(tuple(merges), labels, linkage)


def select_top_regions(compositions: list[RegionComposition],
                       table: EmploymentTable, n: int,
                       year: int | None = None) -> list[RegionComposition]:
    """The n compositions with greatest total employment, descending.

    Employment totals come from the table's records for the reference
    year (default: the latest year present).  Ties break by region code.
    """
    if not 1 <= n <= len(compositions):
        raise ConfigError(f"n must be in [1, {len(compositions)}], got {n}")
    if year is None:
        if not table.years:
            raise DataError("employment table has no records")
        year = table.years[-1]
    elif year not in table.years:
        raise DataError(f"year {year} not present in table (has {table.years})")
    totals: dict[str, float] = {}
    for rec in table.records:
        if rec.year == year:
            totals[rec.region_code] = totals.get(rec.region_code, 0.0) + rec.employment
    missing = [c.region_code for c in compositions if c.region_code not in totals]
    if missing:
        raise DataError(f"regions missing from the {year} table: {missing}")
    ranked = sorted(compositions,
                    key=lambda c: (-totals[c.region_code], c.region_code))
    return ranked[:n]


# ------------------------------------------------------------------ file I/O

def write_dendrogram_json(dend: Dendrogram, path) -> None:
    order = dend.leaf_order()
    payload = {
        "linkage": dend.linkage,
        "leaf_labels": list(dend.leaf_labels),
        "leaf_order": [dend.leaf_labels[i] for i in order],
        "merges": [{"cluster_a": a, "cluster_b": b, "height": h, "new_id": m}
                   for a, b, h, m in dend.merges],
        "newick": dend.to_newick(),
    }
    with open_output(path) as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_heatmap_csv(d: np.ndarray, dend: Dendrogram, path) -> None:
    """Distance matrix reordered to match the dendrogram leaf order."""
    order = list(dend.leaf_order())
    codes = [dend.leaf_labels[i] for i in order]
    sub = d[np.ix_(order, order)]
    with open_output(path) as fh:
        fh.write("region_code," + ",".join(codes) + "\n")
        for code, row in zip(codes, sub):
            fh.write(code + "," + ",".join(fmt(v) for v in row) + "\n")
