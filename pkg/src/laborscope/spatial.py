"""Spatial autocorrelation (Moran's I) and employment location quotients.

Weight matrices are built from region centroid coordinates, either as
k-nearest-neighbor indicators on great-circle distance or as inverse
distance powers, optionally row-standardized.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import pandas as pd

from ._io import fmt, open_output
from .exceptions import ConfigError, DataError
from .matrix import RegionOccupationMatrix
from .validation import as_float_matrix, as_float_vector, check_not_constant

EARTH_RADIUS_KM = 6371.0088


@dataclass(frozen=True)
class RegionCoordinates:
    """region_code -> (latitude, longitude) in degrees."""

    entries: dict[str, tuple[float, float]]

    def __post_init__(self):
        clean = {}
        for code, (lat, lon) in self.entries.items():
            lat, lon = float(lat), float(lon)
            if not -90 <= lat <= 90:
                raise DataError(f"latitude {lat} out of range for region {code}")
            if not -180 <= lon <= 180:
                raise DataError(f"longitude {lon} out of range for region {code}")
            clean[str(code)] = (lat, lon)
        object.__setattr__(self, "entries", clean)

    @property
    def codes(self) -> tuple[str, ...]:
        return tuple(sorted(self.entries))

    def __len__(self) -> int:
        return len(self.entries)

    @classmethod
    def load_csv(cls, path) -> "RegionCoordinates":
        df = pd.read_csv(path, dtype={"region_code": str},
                         float_precision="round_trip")
        for col in ("region_code", "lat", "lon"):
            if col not in df.columns:
                raise ConfigError(f"{path}: coordinates file is missing column {col!r}")
        if df["region_code"].duplicated().any():
            dupes = sorted(df["region_code"][df["region_code"].duplicated()])
            raise DataError(f"{path}: duplicate region codes {dupes}")
        return cls({str(r.region_code): (float(r.lat), float(r.lon))
                    for r in df.itertuples()})

    def save_csv(self, path) -> None:
        with open_output(path) as fh:
            fh.write("region_code,lat,lon\n")
            for code in self.codes:
                lat, lon = self.entries[code]
                fh.write(f"{code},{fmt(lat)},{fmt(lon)}\n")


@dataclass(frozen=True)
class SpatialWeights:
    """Nonnegative R x R weights with zero diagonal, rows in label order."""

    w: np.ndarray
    region_labels: tuple[str, ...]
    row_standardized: bool
    source: str

    def __post_init__(self):
        w = as_float_matrix(self.w, "weights")
        if w.shape[0] != w.shape[1]:
            raise DataError(f"weight matrix must be square, got {w.shape}")
        if (w < 0).any():
            raise DataError("weights contain negative entries")
        if np.abs(np.diag(w)).max(initial=0.0) > 0:
            raise DataError("weight matrix diagonal must be zero")
        if len(self.region_labels) != w.shape[0]:
            raise DataError(f"{len(self.region_labels)} labels for "
                            f"{w.shape[0]} regions")
        if self.row_standardized:
            sums = w.sum(axis=1)
            bad = np.abs(sums[sums > 0] - 1.0) > 1e-12
            if bad.any():
                raise DataError("row-standardized weights must have unit row sums")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "region_labels",
                           tuple(str(c) for c in self.region_labels))

    @property
    def n_regions(self) -> int:
        return self.w.shape[0]


def great_circle_km(lat1, lon1, lat2, lon2) -> float:
    """Haversine distance in kilometers between two (lat, lon) points."""
    p1, p2 = np.radians(lat1), np.radians(lat2)
    dp = p2 - p1
    dl = np.radians(lon2) - np.radians(lon1)
    a = np.sin(dp / 2) ** 2 + np.cos(p1) * np.cos(p2) * np.sin(dl / 2) ** 2
    return float(2 * EARTH_RADIUS_KM * np.arcsin(np.sqrt(min(1.0, a))))


def _distance_matrix(coords: RegionCoordinates) -> tuple[np.ndarray, tuple[str, ...]]:
    codes = coords.codes
    n = len(codes)
    d = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            d[i, j] = d[j, i] = great_circle_km(*coords.entries[codes[i]],
                                                *coords.entries[codes[j]])
    return d, codes


def build_weights(coords: RegionCoordinates, method: str = "knn", k: int = 8,
                  power: float = 2.0,
                  row_standardize: bool = True) -> SpatialWeights:
    """Spatial weights from centroid coordinates.

    knn: w[i][j] = 1 for the k nearest regions to i (great-circle);
    distance ties at the neighborhood boundary resolve by region code and
    are warned about.  inverse_distance: w[i][j] = d_ij**(-power).
    Regions are ordered by code.
    """
    if len(coords) < 2:
        raise DataError(f"need at least 2 regions with coordinates, got {len(coords)}")
    d, codes = _distance_matrix(coords)
    n = len(codes)
    if method == "knn":
        if not 1 <= k <= n - 1:
            raise ConfigError(f"knn k must be in [1, {n - 1}], got {k}")
        w = np.zeros((n, n))
        for i in range(n):
            others = [(d[i, j], codes[j], j) for j in range(n) if j != i]
            others.sort()
            if len(others) > k and others[k - 1][0] == others[k][0]:
                warnings.warn(f"region {codes[i]}: distance tie at the "
                              f"k={k} boundary resolved by region code")
            for _, _, j in others[:k]:
                w[i, j] = 1.0
        source = f"knn({k})"
    elif method == "inverse_distance":
        if not power > 0:
            raise ConfigError(f"power must be > 0, got {power}")
        coincident = [(codes[i], codes[j]) for i in range(n)
                      for j in range(i + 1, n) if d[i, j] == 0.0]
        if coincident:
            raise DataError(f"coincident coordinates make inverse distance "
                            f"undefined: {coincident[:5]}")
        with np.errstate(divide="ignore"):
            w = d ** (-float(power))
        np.fill_diagonal(w, 0.0)
        source = f"inverse_distance({power})"
    else:
        raise ConfigError(f"method must be 'knn' or 'inverse_distance', "
                          f"got {method!r}")
    if row_standardize:
        sums = w.sum(axis=1, keepdims=True)
        w = np.divide(w, sums, out=np.zeros_like(w), where=sums > 0)
    return SpatialWeights(w, codes, row_standardize, source)


def load_adjacency(path, row_standardize: bool = True) -> SpatialWeights:
    """Weights from an edge-list CSV: region_a, region_b[, weight]."""
    df = pd.read_csv(path, dtype={"region_a": str, "region_b": str},
                     float_precision="round_trip")
    for col in ("region_a", "region_b"):
        if col not in df.columns:
            raise ConfigError(f"{path}: adjacency file is missing column {col!r}")
    weights = df["weight"].astype(float) if "weight" in df.columns \
        else pd.Series(1.0, index=df.index)
    codes = tuple(sorted(set(df["region_a"]) | set(df["region_b"])))
    idx = {c: i for i, c in enumerate(codes)}
    w = np.zeros((len(codes), len(codes)))
    for (a, b), wt in zip(zip(df["region_a"], df["region_b"]), weights):
        if a == b:
            raise DataError(f"{path}: self-edge on region {a}")
        if wt < 0:
            raise DataError(f"{path}: negative weight on edge ({a}, {b})")
        w[idx[a], idx[b]] = wt
    if row_standardize:
        sums = w.sum(axis=1, keepdims=True)
        w = np.divide(w, sums, out=np.zeros_like(w), where=sums > 0)
    return SpatialWeights(w, codes, row_standardize, "adjacency_file")


def morans_i(values, weights: SpatialWeights) -> float:
    """Moran's I of a per-region variable under the given weights.

    I = (R / S0) * sum_ij w_ij z_i z_j / sum_i z_i^2 with z = x - mean(x)
    and S0 the total weight.  Needs at least 3 regions and a non-constant
    variable.
    """
    x = as_float_vector(values, "values")
    n = weights.n_regions
    if x.shape[0] != n:
        raise DataError(f"{x.shape[0]} values for {n} regions")
    if n < 3:
        raise DataError(f"Moran's I needs at least 3 regions, got {n}")
    check_not_constant(x, "values")
    s0 = float(weights.w.sum())
    if s0 <= 0:
        raise DataError("weight matrix has zero total weight")
    z = x - x.mean()
    num = float(z @ weights.w @ z)
    den = float(z @ z)
    return (n / s0) * num / den


def expected_morans_i(n_regions: int) -> float:
    """E[I] under the null of no spatial structure."""
    if n_regions < 2:
        raise ConfigError(f"need at least 2 regions, got {n_regions}")
    return -1.0 / (n_regions - 1)


def load_sector_map(path) -> dict[str, str]:
    """occupation_code -> sector_code mapping from CSV."""
    df = pd.read_csv(path, dtype=str)
    for col in ("occupation_code", "sector_code"):
        if col not in df.columns:
            raise ConfigError(f"{path}: sector map is missing column {col!r}")
    if df["occupation_code"].duplicated().any():
        dupes = sorted(df["occupation_code"][df["occupation_code"].duplicated()])
        raise DataError(f"{path}: occupations mapped twice: {dupes}")
    return dict(zip(df["occupation_code"], df["sector_code"]))


def location_quotient(x: RegionOccupationMatrix,
                      group: dict[str, str]) -> pd.DataFrame:
    """Region x sector location quotients.

    LQ[r][s] = (e_rs / e_r) / (E_s / E): a sector's share of the region's
    employment relative to its share of total employment.  Occupations
    without a mapping fall into an "unclassified" sector with a warning;
    regions with no employment at all get a zero row.
    """
    if x.kind != "raw":
        raise DataError(f"location_quotient expects a raw matrix, got kind={x.kind!r}")
    if not group:
        raise ConfigError("sector mapping is empty")
    unmapped = [c for c in x.occupation_labels if c not in group]
    if unmapped:
        warnings.warn(f"{len(unmapped)} occupations have no sector; "
                      f"assigned to 'unclassified'")
    sector_of = [group.get(c, "unclassified") for c in x.occupation_labels]
    sectors = tuple(sorted(set(sector_of)))
    s_idx = {s: i for i, s in enumerate(sectors)}
    e_rs = np.zeros((x.n_regions, len(sectors)))
    for j, s in enumerate(sector_of):
        e_rs[:, s_idx[s]] += x.values[:, j]
    e_r = e_rs.sum(axis=1, keepdims=True)
    e_s = e_rs.sum(axis=0, keepdims=True)
    total = float(e_s.sum())
    if total <= 0:
        raise DataError("matrix has no employment to classify")
    regional_share = np.divide(e_rs, e_r, out=np.zeros_like(e_rs), where=e_r > 0)
    national_share = e_s / total
    lq = np.divide(regional_share, national_share,
                   out=np.zeros_like(regional_share),
                   where=national_share > 0)
    out = pd.DataFrame(lq, index=list(x.region_labels), columns=list(sectors))
    # empty regions cannot be normalized; callers can inspect the flag
    out.attrs["zero_regions"] = [code for code, e in zip(x.region_labels, e_r.ravel())
                                 if e <= 0]
    return out


def write_lq_csv(lq: pd.DataFrame, path) -> None:
    with open_output(path) as fh:
        fh.write("region_code," + ",".join(lq.columns) + "\n")
        for code, row in zip(lq.index, lq.to_numpy()):
            fh.write(str(code) + "," + ",".join(fmt(v) for v in row) + "\n")


def write_moran_csv(rows: list[tuple[str, float]], path) -> None:
    with open_output(path) as fh:
        fh.write("variable,morans_i\n")
        for name, value in rows:
            fh.write(f"{name},{fmt(value)}\n")
