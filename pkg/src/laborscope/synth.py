"""Seeded synthetic employment corpora with planted topic structure.

Each region draws most of its employment from one primary and one
secondary topic; topics own disjoint occupation blocks, so a noiseless
corpus is exactly rank-k and a factorization can be checked against the
planted factors.  A configurable fraction of "local" occupations gets
strictly positive employment everywhere, which TF-IDF weighting must
suppress completely.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._io import fmt, open_output
from .exceptions import ConfigError, DataError
from .ingest import Crosswalk, EmploymentRecord, EmploymentTable
from .spatial import RegionCoordinates

EVENT_KINDS = ("drop", "merge", "split")


@dataclass(frozen=True)
class SynthSpec:
    """Shape, seed and noise parameters of a synthetic corpus.

    events plant topic dynamics: ("drop", year, topic) zeroes a topic's
    regional weights from that year on; ("merge", year, a, b) folds topic
    b into topic a; ("split", year, a, b) moves half of topic a's
    occupation block into the previously empty topic b.  Topic ids are
    1-based, years are calendar years.
    """

    regions: int = 60
    occupations: int = 120
    topics: int = 8
    seed: int = 7
    noise_level: float = 0.0
    local_occupation_fraction: float = 0.0
    planted_h: np.ndarray | None = None
    years: int = 1
    base_year: int = 2014
    drift: float = 0.0
    events: tuple[tuple, ...] = ()

    def __post_init__(self):
        if min(self.regions, self.occupations, self.topics) < 1:
            raise ConfigError("regions, occupations and topics must be >= 1")
        if self.topics > min(self.regions, self.occupations):
            raise ConfigError(f"topics={self.topics} exceeds "
                              f"min(regions, occupations)="
                              f"{min(self.regions, self.occupations)}")
        if self.noise_level < 0:
            raise ConfigError(f"noise_level must be >= 0, got {self.noise_level}")
        if not 0 <= self.local_occupation_fraction <= 1:
            raise ConfigError("local_occupation_fraction must be in [0, 1], "
                              f"got {self.local_occupation_fraction}")
        if self.years < 1:
            raise ConfigError(f"years must be >= 1, got {self.years}")
        if self.drift < 0:
            raise ConfigError(f"drift must be >= 0, got {self.drift}")
        if self.planted_h is not None:
            h = np.asarray(self.planted_h, dtype=np.float64)
            if h.shape != (self.topics, self.occupations):
                raise ConfigError(f"planted_h must be {self.topics}x"
                                  f"{self.occupations}, got {h.shape}")
            if (h < 0).any():
                raise ConfigError("planted_h must be nonnegative")
            object.__setattr__(self, "planted_h", h)
        for ev in self.events:
            kind = ev[0]
            if kind not in EVENT_KINDS:
                raise ConfigError(f"unknown event kind {kind!r}; "
                                  f"expected one of {EVENT_KINDS}")
            need = 3 if kind == "drop" else 4
            if len(ev) != need:
                raise ConfigError(f"{kind} event takes {need - 1} arguments, "
                                  f"got {ev}")
            year, topics = int(ev[1]), [int(t) for t in ev[2:]]
            if not self.base_year <= year < self.base_year + self.years:
                raise ConfigError(f"event year {year} outside generated range")
            for t in topics:
                if not 1 <= t <= self.topics:
                    raise ConfigError(f"event topic {t} outside [1, {self.topics}]")


@dataclass(frozen=True)
class SynthResult:
    table: EmploymentTable
    region_codes: tuple[str, ...]
    occupation_codes: tuple[str, ...]
    local_occupations: tuple[str, ...]
    planted_w: dict[int, np.ndarray]
    planted_h: dict[int, np.ndarray]
    coords: RegionCoordinates
    sectors: dict[str, str]
    spec: SynthSpec | None = field(repr=False, default=None)


def _codes(prefix: str, n: int) -> tuple[str, ...]:
    # zero-padded so lexicographic order equals index order
    width = max(4, len(str(n - 1)))
    return tuple(f"{prefix}{i:0{width}d}" for i in range(n))


def _apply_events(w: np.ndarray, h: np.ndarray, spec: SynthSpec,
                  year: int) -> tuple[np.ndarray, np.ndarray]:
    w, h = w.copy(), h.copy()
    for ev in sorted(spec.events, key=lambda e: (int(e[1]), str(e[0]))):
        if int(ev[1]) > year:
            continue
        kind = ev[0]
        if kind == "drop":
            t = int(ev[2]) - 1
            w[:, t] = 0.0
            h[t] = 0.0
        elif kind == "merge":
            a, b = int(ev[2]) - 1, int(ev[3]) - 1
            h[a] += h[b]
            w[:, a] += w[:, b]
            h[b] = 0.0
            w[:, b] = 0.0
        else:  # split
            a, b = int(ev[2]) - 1, int(ev[3]) - 1
            if h[b].any() or w[:, b].any():
                raise ConfigError(f"split target topic {b + 1} is not empty "
                                  f"in year {year}")
            support = np.nonzero(h[a])[0]
            if len(support) < 2:
                raise ConfigError(f"topic {a + 1} has too few occupations to split")
            moved = support[len(support) // 2:]
            h[b, moved] = h[a, moved]
            h[a, moved] = 0.0
            w[:, b] = w[:, a]
    return w, h


def generate(spec: SynthSpec) -> SynthResult:
    """Build a deterministic synthetic corpus from a spec.

    The noiseless single-year table satisfies X = W* H* exactly, with
    local occupations added on top as strictly positive near-uniform
    columns.  Noise is additive Gaussian scaled by entry magnitude and
    truncated at zero, so zero entries stay exactly zero.
    """
    rng = np.random.default_rng(spec.seed)
    r, o, k = spec.regions, spec.occupations, spec.topics
    region_codes = _codes("R", r)
    occ_codes = _codes("O", o)

    n_local = int(round(spec.local_occupation_fraction * o))
    if spec.planted_h is not None:
        n_local = 0
    if o - n_local < k:
        raise ConfigError(f"only {o - n_local} non-local occupations for "
                          f"{k} topics")
    local = tuple(occ_codes[o - n_local:]) if n_local else ()
    topical = o - n_local

    # topic occupation blocks: contiguous, disjoint, jointly covering the
    # non-local occupations
    bounds = np.linspace(0, topical, k + 1).astype(int)
    h0 = np.zeros((k, o))
    if spec.planted_h is not None:
        h0 = spec.planted_h.copy()
        block_of = np.argmax(h0, axis=0)
    else:
        block_of = np.zeros(o, dtype=int)
        for t in range(k):
            lo, hi = bounds[t], bounds[t + 1]
            h0[t, lo:hi] = rng.uniform(0.5, 1.5, size=hi - lo)
            block_of[lo:hi] = t

    # every region works one primary topic; two of every three primary
    # cycles add a lighter secondary topic.  The pure regions anchor each
    # topic, which keeps the planted factors the only nonnegative
    # factorization and therefore recoverable.
    w0 = np.zeros((r, k))
    sizes = rng.uniform(0.5, 1.5, size=r) * 10 ** rng.uniform(2, 3, size=r)
    primary = np.arange(r) % k
    secondary = (primary + 1 + rng.integers(0, max(1, k - 1), size=r)) % k
    for i in range(r):
        w0[i, primary[i]] = sizes[i] * rng.uniform(0.8, 1.2)
        side = sizes[i] * rng.uniform(0.05, 0.15)
        if k > 1 and (i // k) % 3:
            w0[i, secondary[i]] = side

    local_levels = rng.uniform(200, 400, size=n_local)
    local_jitter = rng.uniform(0.95, 1.05, size=(r, n_local))

    # coordinates on a jittered grid over the continental-US box
    n_side = int(np.ceil(np.sqrt(r)))
    lats = np.linspace(27, 47, n_side)
    lons = np.linspace(-120, -73, n_side)
    coord_entries = {}
    for i, code in enumerate(region_codes):
        gi, gj = divmod(i, n_side)
        coord_entries[code] = (
            float(lats[gi] + rng.uniform(-0.4, 0.4)),
            float(lons[gj] + rng.uniform(-0.4, 0.4)))
    coords = RegionCoordinates(coord_entries)

    sectors = {code: f"S{block_of[j] + 1:02d}" for j, code in
               enumerate(occ_codes[:topical])}
    sectors.update({code: "S00" for code in local})

    records = []
    planted_w: dict[int, np.ndarray] = {}
    planted_h: dict[int, np.ndarray] = {}
    for y in range(spec.years):
        year = spec.base_year + y
        wy, hy = _apply_events(w0, h0, spec, year)
        if spec.drift > 0 and y > 0:
            wy = np.maximum(0.0, wy * (1.0 + spec.drift *
                                       rng.standard_normal(wy.shape)))
        x = wy @ hy
        if n_local:
            x = x.copy()
            x[:, o - n_local:] += local_levels * local_jitter
        if spec.noise_level > 0:
            x = np.maximum(0.0, x + spec.noise_level * x *
                           rng.standard_normal(x.shape))
        planted_w[year] = wy
        planted_h[year] = hy
        for i, rcode in enumerate(region_codes):
            for j, ocode in enumerate(occ_codes):
                if x[i, j] > 0:
                    records.append(EmploymentRecord(
                        rcode, f"Synthetic region {i}", ocode,
                        f"Synthetic occupation {j}", year, float(x[i, j])))
    table = EmploymentTable(tuple(records))
    return SynthResult(table, region_codes, occ_codes, local,
                       planted_w, planted_h, coords, sectors, spec)


def write_corpus(result: SynthResult, out_dir) -> list[str]:
    """Write the table plus planted factors and auxiliary inputs.

    Emits table.csv, crosswalk.csv (empty but valid), coords.csv,
    sectors.csv, and per-year planted_w_<year>.csv / planted_h_<year>.csv.
    Returns the relative file names written.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    result.table.save_csv(out / "table.csv")
    written.append("table.csv")
    Crosswalk(()).save_csv(out / "crosswalk.csv")
    written.append("crosswalk.csv")
    result.coords.save_csv(out / "coords.csv")
    written.append("coords.csv")
    with open_output(out / "sectors.csv") as fh:
        fh.write("occupation_code,sector_code\n")
        for code in result.occupation_codes:
            fh.write(f"{code},{result.sectors[code]}\n")
    written.append("sectors.csv")

    k = result.spec.topics if result.spec else next(iter(result.planted_w.values())).shape[1]
    topic_cols = ",".join(f"topic_{t}" for t in range(1, k + 1))
    for year in sorted(result.planted_w):
        name = f"planted_w_{year}.csv"
        with open_output(out / name) as fh:
            fh.write("region_code," + topic_cols + "\n")
            for code, row in zip(result.region_codes, result.planted_w[year]):
                fh.write(code + "," + ",".join(fmt(v) for v in row) + "\n")
        written.append(name)
        name = f"planted_h_{year}.csv"
        with open_output(out / name) as fh:
            fh.write("topic," + ",".join(result.occupation_codes) + "\n")
            for t, row in enumerate(result.planted_h[year], start=1):
                fh.write(f"topic_{t}," + ",".join(fmt(v) for v in row) + "\n")
        written.append(name)
    return written
