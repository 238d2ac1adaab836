"""End-to-end pipeline: ingest through alignment, clustering and the
spatial comparison, with a reproducibility manifest.

Every stage hands files to the next; a failure leaves a ".partial"
marker naming the failed stage.  The manifest carries the effective
config plus content hashes of all inputs and outputs and no timestamps,
so identical runs produce byte-identical output trees.
"""

from __future__ import annotations

import hashlib
import json
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import clustering, dynamics, spatial, topics, weighting
from ._io import fmt
from .exceptions import ConfigError, DataError, LaborscopeError
from .factorization import FitConfig, fit_model, normalize, save_model
from .ingest import ColumnMap, Crosswalk, apply_crosswalk, parse_csv, \
    restrict_consistent, to_matrix
from .matrix import RegionOccupationMatrix

_COLUMN_KEYS = ("region_code", "region_name", "occupation_code",
                "occupation_name", "employment", "year")
_CONFIG_KEYS = {
    "input", "out", "crosswalk", "coords", "sectors", "years", "k", "alpha",
    "solver", "init", "seed", "max_iter", "tol", "log_base", "linkage",
    "weights_method", "weights_k", "weights_power", "row_standardize",
    "top_regions", "top_n", "columns", "fixed_year", "threads",
}


@dataclass(frozen=True)
class PipelineConfig:
    input_table: str
    out_dir: str
    crosswalk: str | None = None
    coords: str | None = None
    sectors: str | None = None
    years: tuple[int, ...] = ()
    k: int = 15
    alpha: float = 0.5
    solver: str = "mu"
    init: str = "nndsvd"
    seed: int = 0
    max_iter: int = 500
    tol: float = 1e-6
    log_base: str = "e"
    linkage: str = "average"
    weights_method: str = "knn"
    weights_k: int = 8
    weights_power: float = 2.0
    row_standardize: bool = True
    top_regions: int = 50
    top_n: int = 10
    columns: tuple[tuple[str, str | None], ...] = ()
    fixed_year: int | None = None
    threads: int = 1

    def __post_init__(self):
        for key, _ in self.columns:
            if key not in _COLUMN_KEYS:
                raise ConfigError(f"unknown column mapping key {key!r}; "
                                  f"expected one of {_COLUMN_KEYS}")
        if self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads}")
        object.__setattr__(self, "years",
                           tuple(int(y) for y in self.years))

    def column_map(self) -> ColumnMap:
        overrides = dict(self.columns)
        base = ColumnMap()
        return ColumnMap(
            region_code=overrides.get("region_code", base.region_code),
            region_name=overrides.get("region_name", base.region_name),
            occupation_code=overrides.get("occupation_code", base.occupation_code),
            occupation_name=overrides.get("occupation_name", base.occupation_name),
            employment=overrides.get("employment", base.employment),
            year=overrides.get("year", base.year) if "year" in overrides
            else (None if self.fixed_year is not None else base.year))

    def to_dict(self) -> dict:
        d = {
            "input": self.input_table,
            "out": self.out_dir,
            "crosswalk": self.crosswalk,
            "coords": self.coords,
            "sectors": self.sectors,
            "years": list(self.years),
            "k": self.k,
            "alpha": self.alpha,
            "solver": self.solver,
            "init": self.init,
            "seed": self.seed,
            "max_iter": self.max_iter,
            "tol": self.tol,
            "log_base": self.log_base,
            "linkage": self.linkage,
            "weights_method": self.weights_method,
            "weights_k": self.weights_k,
            "weights_power": self.weights_power,
            "row_standardize": self.row_standardize,
            "top_regions": self.top_regions,
            "top_n": self.top_n,
            "columns": {k: v for k, v in self.columns},
            "fixed_year": self.fixed_year,
            "threads": self.threads,
        }
        return d

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def from_dict(cls, d: dict, base_dir=None) -> "PipelineConfig":
        unknown = set(d) - _CONFIG_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "input" not in d:
            raise ConfigError("config is missing required key 'input'")
        if "out" not in d:
            raise ConfigError("config is missing required key 'out'")

        def resolve(p):
            if p is None:
                return None
            p = str(p)
            if base_dir is not None and not Path(p).is_absolute():
                return str((Path(base_dir) / p))
            return p

        columns = d.get("columns") or {}
        return cls(
            input_table=resolve(d["input"]),
            out_dir=resolve(d["out"]),
            crosswalk=resolve(d.get("crosswalk")),
            coords=resolve(d.get("coords")),
            sectors=resolve(d.get("sectors")),
            years=tuple(d.get("years") or ()),
            k=int(d.get("k", 15)),
            alpha=float(d.get("alpha", 0.5)),
            solver=str(d.get("solver", "mu")),
            init=str(d.get("init", "nndsvd")),
            seed=int(d.get("seed", 0)),
            max_iter=int(d.get("max_iter", 500)),
            tol=float(d.get("tol", 1e-6)),
            log_base=str(d.get("log_base", "e")),
            linkage=str(d.get("linkage", "average")),
            weights_method=str(d.get("weights_method", "knn")),
            weights_k=int(d.get("weights_k", 8)),
            weights_power=float(d.get("weights_power", 2.0)),
            row_standardize=bool(d.get("row_standardize", True)),
            top_regions=int(d.get("top_regions", 50)),
            top_n=int(d.get("top_n", 10)),
            columns=tuple(sorted(columns.items())),
            fixed_year=d.get("fixed_year"),
            threads=int(d.get("threads", 1)))

    @classmethod
    def from_file(cls, path) -> "PipelineConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            with open(path, "r", encoding="utf-8") as fh:
                d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from None
        if not isinstance(d, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        return cls.from_dict(d, base_dir=path.parent)


@contextmanager
def _stage(name: str, marker: Path):
    try:
        yield
    except LaborscopeError as exc:
        marker.write_text(f"failed at stage {name}: {exc}\n", encoding="utf-8")
        raise type(exc)(f"stage {name}: {exc}") from exc
    except OSError as exc:
        marker.write_text(f"failed at stage {name}: {exc}\n", encoding="utf-8")
        raise DataError(f"stage {name}: {exc}") from exc
    except Exception as exc:
        marker.write_text(f"failed at stage {name}: {exc}\n", encoding="utf-8")
        raise


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def run_pipeline(cfg: PipelineConfig) -> dict:
    """Run every stage and return the manifest (also written to disk)."""
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    marker = out / ".partial"
    marker.write_text("running\n", encoding="utf-8")

    stages: list[dict] = []

    def done(name: str, note: str = ""):
        stages.append({"name": name, "status": "ok", "note": note})

    def skipped(name: str, note: str):
        stages.append({"name": name, "status": "skipped", "note": note})

    # ------------------------------------------------------------ ingest
    with _stage("ingest", marker):
        result = parse_csv(cfg.input_table, cfg.column_map(),
                           year=cfg.fixed_year)
        table = result.table
        if not table.records:
            raise DataError("input table has no usable records")
        done("ingest", f"records={len(table)} suppressed={result.n_suppressed} "
                       f"row_errors={len(result.errors)}")

    years = cfg.years or table.years

    # --------------------------------------------------------- crosswalk
    with _stage("crosswalk", marker):
        if cfg.crosswalk is not None:
            xwalk = Crosswalk.load_csv(cfg.crosswalk)
            table = apply_crosswalk(table, xwalk)
            done("crosswalk", f"entries={len(xwalk)}")
        elif len(years) > 1:
            raise DataError("multi-year input requires a crosswalk file "
                            "(an empty one is accepted)")
        else:
            skipped("crosswalk", "single year, no crosswalk configured")

    # ---------------------------------------------------------- restrict
    with _stage("restrict", marker):
        for y in years:
            if y not in table.years:
                raise DataError(f"requested year {y} not in input "
                                f"(has {table.years})")
        table = restrict_consistent(table, years)
        table.save_csv(out / "canonical_table.csv")
        done("restrict", f"regions={len(table.regions)} years={list(years)}")

    names = {}
    for rec in table.records:
        names.setdefault(rec.occupation_code, rec.occupation_name)

    # ------------------------------------------------------------- tfidf
    with _stage("tfidf", marker):
        pooled_values = np.zeros((len(table.regions), len(table.occupations)))
        for y in years:
            pooled_values += to_matrix(table, y).values
        pooled_raw = RegionOccupationMatrix(pooled_values, table.regions,
                                            table.occupations, "raw")
        pooled_raw.save_csv(out / "matrix_raw_pooled.csv")
        pooled_tfidf = weighting.tfidf(pooled_raw, log_base=cfg.log_base)
        pooled_tfidf.save_csv(out / "matrix_tfidf_pooled.csv")
        done("tfidf", f"shape={len(table.regions)}x{len(table.occupations)}")

    # -------------------------------------------------------- fit pooled
    with _stage("fit_pooled", marker):
        fit_cfg = FitConfig(k=cfg.k, max_iter=cfg.max_iter, tol=cfg.tol,
                            solver=cfg.solver, init=cfg.init, seed=cfg.seed)
        pooled_model = normalize(fit_model(pooled_tfidf, fit_cfg))
        save_model(pooled_model, out / "model_pooled")
        done("fit_pooled", f"iterations={pooled_model.iterations_run} "
                           f"converged={pooled_model.converged}")

    # ------------------------------------------------------------ topics
    with _stage("topics", marker):
        summaries = topics.summarize_topics(pooled_model, cfg.top_n, names)
        topics.write_topics_json(summaries, out / "topics.json")
        comps = topics.compose_regions(pooled_model)
        topics.write_compositions_csv(comps, out / "compositions.csv")
        with open(out / "prevalence.csv", "w", encoding="utf-8",
                  newline="\n") as fh:
            fh.write("topic_id,region_code,weight\n")
            for t in range(1, pooled_model.k + 1):
                for code, wt in topics.topic_prevalence(pooled_model, t):
                    fh.write(f"{t},{code},{fmt(wt)}\n")
        done("topics", f"k={pooled_model.k}")

    # --------------------------------------------------------- per year
    year_models = []
    with _stage("fit_years", marker):
        if len(years) < 2:
            skipped("fit_years", "single year; pooled model covers it")
        else:
            for y in years:
                m_raw = to_matrix(table, y)
                m_tfidf = weighting.tfidf(m_raw, log_base=cfg.log_base)
                model = normalize(fit_model(m_tfidf, fit_cfg, year=y))
                save_model(model, out / f"model_{y}")
                year_models.append(model)
            done("fit_years", f"years={list(years)}")

    # ------------------------------------------------------------- align
    with _stage("align", marker):
        if len(year_models) < 2:
            skipped("align", "needs at least 2 per-year models")
        else:
            alignment = dynamics.chain(year_models, alpha=cfg.alpha)
            dynamics.write_alignment_json(alignment, out / "alignment.json")
            done("align", f"pairs={len(alignment.year_pairs)} "
                          f"edges={len(alignment.edges)} "
                          f"chains={len(alignment.chains)}")

    # ----------------------------------------------------------- cluster
    with _stage("cluster", marker):
        n_top = min(cfg.top_regions, len(comps))
        top = clustering.select_top_regions(comps, table, n_top,
                                            year=max(years))
        usable = [c for c in top if not c.is_zero]
        if len(usable) < 2:
            skipped("cluster", "fewer than 2 regions with topic mass")
        else:
            dist = clustering.cosine_distance_matrix(usable)
            dend = clustering.hierarchical_cluster(
                dist, cfg.linkage, [c.region_code for c in usable])
            clustering.write_dendrogram_json(dend, out / "dendrogram.json")
            clustering.write_heatmap_csv(dist, dend, out / "heatmap.csv")
            done("cluster", f"regions={len(usable)} linkage={cfg.linkage}")

    # ---------------------------------------------------------------- lq
    lq = None
    with _stage("lq", marker):
        if cfg.sectors is None:
            skipped("lq", "no sector mapping configured")
        else:
            sector_map = spatial.load_sector_map(cfg.sectors)
            lq = spatial.location_quotient(pooled_raw, sector_map)
            spatial.write_lq_csv(lq, out / "lq.csv")
            done("lq", f"sectors={lq.shape[1]} "
                       f"zero_regions={len(lq.attrs['zero_regions'])}")

    # ------------------------------------------------------------- moran
    with _stage("moran", marker):
        if cfg.coords is None:
            skipped("moran", "no coordinates configured")
        else:
            coords = spatial.RegionCoordinates.load_csv(cfg.coords)
            missing = [c for c in table.regions if c not in coords.entries]
            if missing:
                raise DataError(f"coordinates missing for regions "
                                f"{missing[:10]}"
                                + ("..." if len(missing) > 10 else ""))
            coords = spatial.RegionCoordinates(
                {c: coords.entries[c] for c in table.regions})
            weights = spatial.build_weights(
                coords, cfg.weights_method,
                k=min(cfg.weights_k, len(table.regions) - 1),
                power=cfg.weights_power,
                row_standardize=cfg.row_standardize)
            dropped = 0

            def per_variable(matrix_by_code, out_name):
                nonlocal dropped
                rows = []
                for var, by_code in matrix_by_code:
                    vals = np.array([by_code[c] for c in weights.region_labels])
                    if np.ptp(vals) == 0:
                        dropped += 1
                        continue
                    rows.append((var, spatial.morans_i(vals, weights)))
                spatial.write_moran_csv(rows, out / out_name)
                return len(rows)

            topic_vars = []
            for t in range(1, pooled_model.k + 1):
                by_code = {c.region_code: c.weights[t - 1] for c in comps}
                topic_vars.append((f"topic_{t}", by_code))
            n_topic = per_variable(topic_vars, "moran_topics.csv")

            n_sector = 0
            if lq is not None:
                sector_vars = []
                for s in lq.columns:
                    by_code = dict(zip(lq.index, lq[s]))
                    sector_vars.append((str(s), by_code))
                n_sector = per_variable(sector_vars, "moran_sectors.csv")
            done("moran", f"topic_vars={n_topic} sector_vars={n_sector} "
                          f"constant_skipped={dropped}")

    # ---------------------------------------------------------- manifest
    inputs = {}
    for p in (cfg.input_table, cfg.crosswalk, cfg.coords, cfg.sectors):
        if p is not None:
            inputs[str(p)] = _sha256(Path(p))
    outputs = {}
    for p in sorted(out.rglob("*")):
        if p.is_file() and p.name not in ("run-manifest.json", ".partial"):
            outputs[p.relative_to(out).as_posix()] = _sha256(p)
    manifest = {
        "config": cfg.to_dict(),
        "inputs": inputs,
        "outputs": outputs,
        "stages": stages,
    }
    with open(out / "run-manifest.json", "w", encoding="utf-8",
              newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    marker.unlink(missing_ok=True)
    return manifest
