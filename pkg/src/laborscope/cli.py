"""Command-line driver.

Subcommands: ingest, tfidf, fit, topics, compose, prevalence, align,
cluster, moran, lq, synth, run.  Exit codes: 0 ok, 2 config error,
3 data error, 4 numeric failure.  Diagnostics go to stderr; data goes to
stdout only with `--out -`.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np
import pandas as pd

from . import clustering, dynamics, spatial, topics, weighting
from .exceptions import ConfigError, DataError, LaborscopeError
from .factorization import FitConfig, fit_model, load_model, normalize, save_model
from .ingest import ColumnMap, Crosswalk, EmploymentTable, apply_crosswalk, \
    parse_csv, restrict_consistent, to_matrix
from .matrix import RegionOccupationMatrix
from .pipeline import PipelineConfig, run_pipeline
from .synth import SynthSpec, generate, write_corpus


def _say(msg: str) -> None:
    print(msg, file=sys.stderr)


# ------------------------------------------------------------- subcommands

def _cmd_ingest(args) -> int:
    if args.format == "oes":
        base = ColumnMap.oes()
    else:
        base = ColumnMap()
    colmap = ColumnMap(
        region_code=args.col_region_code or base.region_code,
        region_name=args.col_region_name or base.region_name,
        occupation_code=args.col_occupation_code or base.occupation_code,
        occupation_name=args.col_occupation_name or base.occupation_name,
        employment=args.col_employment or base.employment,
        year=args.col_year if args.col_year else
        (None if args.fixed_year is not None else base.year))
    suppressed = tuple(args.suppressed) if args.suppressed else None
    kwargs = {"suppressed": suppressed} if suppressed else {}
    result = parse_csv(args.infile, colmap, year=args.fixed_year, **kwargs)
    table = result.table
    _say(f"parsed {len(table)} records "
         f"({result.n_suppressed} suppressed, {len(result.errors)} row errors)")
    for line, msg in result.errors[:5]:
        _say(f"  line {line}: {msg}")
    if len(result.errors) > 5:
        _say(f"  ... and {len(result.errors) - 5} more")

    if args.crosswalk:
        xwalk = Crosswalk.load_csv(args.crosswalk)
        table = apply_crosswalk(table, xwalk)
        _say(f"crosswalk applied ({len(xwalk)} entries); "
             f"{len(table.regions)} regions remain")
    if args.restrict_years:
        table = restrict_consistent(table, args.restrict_years)
        _say(f"restricted to {len(table.regions)} regions consistent across "
             f"{sorted(args.restrict_years)}")
    table.save(args.out)
    if args.matrix_year is not None:
        if not args.matrix_out:
            raise ConfigError("--matrix-out is required with --matrix-year")
        to_matrix(table, args.matrix_year).save(args.matrix_out)
        _say(f"matrix for {args.matrix_year} written to {args.matrix_out}")
    return 0


def _cmd_tfidf(args) -> int:
    x = RegionOccupationMatrix.load(args.infile)
    out = weighting.tfidf(x, log_base=args.log_base,
                          prune_empty=args.prune_empty)
    out.save(args.out)
    _say(f"tfidf matrix {out.n_regions}x{out.n_occupations} written")
    return 0


def _cmd_fit(args) -> int:
    x = RegionOccupationMatrix.load(args.infile)
    cfg = FitConfig(k=args.k, max_iter=args.max_iter, tol=args.tol,
                    solver=args.solver, init=args.init, seed=args.seed)
    model = fit_model(x, cfg, year=args.year)
    if args.normalize:
        model = normalize(model)
    save_model(model, args.out)
    _say(f"fit k={model.k} iterations={model.iterations_run} "
         f"converged={model.converged} "
         f"objective={float(model.final_objective)!r}")
    return 0


def _names_from_table(path) -> dict[str, str]:
    table = EmploymentTable.load(path)
    names: dict[str, str] = {}
    for rec in table.records:
        names.setdefault(rec.occupation_code, rec.occupation_name)
    return names


def _cmd_topics(args) -> int:
    model = load_model(args.model)
    names = _names_from_table(args.names) if args.names else None
    summaries = topics.summarize_topics(model, args.top_n, names)
    topics.write_topics_json(summaries, args.out)
    return 0


def _cmd_compose(args) -> int:
    model = load_model(args.model)
    comps = topics.compose_regions(model)
    topics.write_compositions_csv(comps, args.out)
    zero = [c.region_code for c in comps if c.is_zero]
    if zero:
        _say(f"{len(zero)} regions have zero topic mass: {zero[:5]}")
    return 0


def _cmd_prevalence(args) -> int:
    model = load_model(args.model)
    pairs = topics.topic_prevalence(model, args.topic)
    topics.write_prevalence_csv(pairs, args.out)
    return 0


def _cmd_align(args) -> int:
    models = [load_model(d) for d in args.models]
    if len(models) < 2:
        raise ConfigError("align needs at least 2 model directories")
    if len(models) == 2:
        alignment = dynamics.align(models[0], models[1], alpha=args.alpha,
                                   method=args.method)
    else:
        alignment = dynamics.chain(models, alpha=args.alpha,
                                   method=args.method)
    dynamics.write_alignment_json(alignment, args.out)
    _say(f"{len(alignment.edges)} edges over {len(alignment.year_pairs)} "
         f"year pairs")
    return 0


def _cmd_cluster(args) -> int:
    model = load_model(args.model)
    comps = topics.compose_regions(model)
    if args.top is not None:
        if not args.table:
            raise ConfigError("--top requires --table to rank regions "
                              "by employment")
        table = EmploymentTable.load(args.table)
        comps = clustering.select_top_regions(comps, table,
                                              min(args.top, len(comps)),
                                              year=args.year)
    usable = [c for c in comps if not c.is_zero]
    if len(usable) < len(comps):
        _say(f"dropping {len(comps) - len(usable)} regions with zero "
             f"topic mass")
    dist = clustering.cosine_distance_matrix(usable)
    dend = clustering.hierarchical_cluster(dist, args.linkage,
                                           [c.region_code for c in usable])
    clustering.write_dendrogram_json(dend, args.out)
    if args.heatmap:
        clustering.write_heatmap_csv(dist, dend, args.heatmap)
    return 0


def _load_values_csv(path) -> tuple[list[str], pd.DataFrame]:
    df = pd.read_csv(path, dtype={"region_code": str},
                     float_precision="round_trip")
    if "region_code" not in df.columns:
        raise DataError(f"{path}: values file needs a region_code column")
    df = df.set_index("region_code")
    numeric = [c for c in df.columns
               if pd.api.types.is_numeric_dtype(df[c])
               and not pd.api.types.is_bool_dtype(df[c])]
    if not numeric:
        raise DataError(f"{path}: no numeric value columns found")
    return numeric, df


def _cmd_moran(args) -> int:
    variables, df = _load_values_csv(args.values)
    if args.adjacency:
        weights = spatial.load_adjacency(args.adjacency,
                                         row_standardize=args.row_standardize)
    else:
        if not args.coords:
            raise ConfigError("moran needs --coords (or --adjacency)")
        coords = spatial.RegionCoordinates.load_csv(args.coords)
        missing = [c for c in df.index if c not in coords.entries]
        if missing:
            raise DataError(f"coordinates missing for regions {missing[:10]}")
        coords = spatial.RegionCoordinates(
            {c: coords.entries[c] for c in df.index})
        weights = spatial.build_weights(coords, args.method,
                                        k=args.k, power=args.power,
                                        row_standardize=args.row_standardize)
    missing = [c for c in weights.region_labels if c not in df.index]
    if missing:
        raise DataError(f"values missing for regions {missing[:10]}")
    rows = []
    for var in variables:
        vals = df[var].reindex(list(weights.region_labels)).to_numpy(float)
        if np.isnan(vals).any():
            raise DataError(f"column {var!r} has missing values")
        if np.ptp(vals) == 0:
            _say(f"skipping constant variable {var!r}")
            continue
        rows.append((var, spatial.morans_i(vals, weights)))
    spatial.write_moran_csv(rows, args.out)
    _say(f"{len(rows)} variables under {weights.source} weights")
    return 0


def _cmd_lq(args) -> int:
    x = RegionOccupationMatrix.load(args.infile)
    sector_map = spatial.load_sector_map(args.sectors)
    lq = spatial.location_quotient(x, sector_map)
    spatial.write_lq_csv(lq, args.out)
    zero = lq.attrs.get("zero_regions", [])
    if zero:
        _say(f"{len(zero)} regions with no employment: {zero[:5]}")
    return 0


def _parse_event(text: str) -> tuple:
    parts = text.split(":")
    kind = parts[0]
    if kind == "drop" and len(parts) == 3:
        return ("drop", int(parts[1]), int(parts[2]))
    if kind in ("merge", "split") and len(parts) == 4:
        return (kind, int(parts[1]), int(parts[2]), int(parts[3]))
    raise ConfigError(f"bad event {text!r}; expected drop:YEAR:T, "
                      f"merge:YEAR:A:B or split:YEAR:A:B")


def _cmd_synth(args) -> int:
    spec = SynthSpec(
        regions=args.regions, occupations=args.occupations,
        topics=args.topics, seed=args.seed, noise_level=args.noise,
        local_occupation_fraction=args.local_fraction,
        years=args.years, base_year=args.base_year, drift=args.drift,
        events=tuple(_parse_event(e) for e in (args.event or ())))
    result = generate(spec)
    written = write_corpus(result, args.out)

    out = Path(args.out)
    cfg = PipelineConfig.from_dict({
        "input": "table.csv",
        "crosswalk": "crosswalk.csv",
        "coords": "coords.csv",
        "sectors": "sectors.csv",
        "out": "results",
        "k": spec.topics,
        "seed": spec.seed,
        "weights_k": min(8, spec.regions - 1) if spec.regions > 1 else 1,
        "top_regions": min(50, spec.regions),
    })
    cfg.save(out / "config.json")
    written.append("config.json")
    _say(f"synthetic corpus in {out} ({len(result.table)} records, "
         f"{spec.years} year(s)); files: {', '.join(written)}")
    _say(f"run it with: laborscope run --config {out / 'config.json'}")
    return 0


def _cmd_run(args) -> int:
    cfg = PipelineConfig.from_file(args.config)
    overrides = {}
    if args.out:
        overrides["out"] = str(Path(args.out).resolve())
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.threads is not None:
        overrides["threads"] = args.threads
    if overrides:
        d = cfg.to_dict()
        d.update(overrides)
        cfg = PipelineConfig.from_dict(d)
    manifest = run_pipeline(cfg)
    ok = sum(1 for s in manifest["stages"] if s["status"] == "ok")
    skipped = sum(1 for s in manifest["stages"] if s["status"] == "skipped")
    _say(f"pipeline complete: {ok} stages ok, {skipped} skipped; "
         f"outputs in {cfg.out_dir}")
    return 0


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="laborscope",
        description="Extract latent industrial topics from regional "
                    "occupation employment tables.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse an employment CSV into a "
                                      "canonical table")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True,
                   help="output table (.csv or .lscope cache); - for stdout")
    p.add_argument("--format", choices=["canonical", "oes"],
                   default="canonical")
    p.add_argument("--col-region-code")
    p.add_argument("--col-region-name")
    p.add_argument("--col-occupation-code")
    p.add_argument("--col-occupation-name")
    p.add_argument("--col-employment")
    p.add_argument("--col-year")
    p.add_argument("--fixed-year", type=int,
                   help="year stamp for files without a year column")
    p.add_argument("--suppressed", nargs="*",
                   help="employment markers treated as withheld "
                        "(default: ** # and empty)")
    p.add_argument("--crosswalk", help="region recoding CSV "
                                       "(year,old_code,canonical_code)")
    p.add_argument("--restrict-years", nargs="+", type=int,
                   help="keep only regions present in every listed year")
    p.add_argument("--matrix-year", type=int,
                   help="also write the dense matrix for this year")
    p.add_argument("--matrix-out")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("tfidf", help="weight a raw matrix")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--log-base", choices=["e", "2", "10"], default="e")
    p.add_argument("--prune-empty", action="store_true",
                   help="drop occupations with no employment anywhere")
    p.set_defaults(func=_cmd_tfidf)

    p = sub.add_parser("fit", help="factorize a matrix into topics")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True, help="model output directory")
    p.add_argument("--k", type=int, default=15)
    p.add_argument("--solver", choices=["mu", "hals"], default="mu")
    p.add_argument("--init", choices=["nndsvd", "random"], default="nndsvd")
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--year", type=int, help="year tag stored in the model")
    p.add_argument("--normalize", action="store_true",
                   help="store with unit-L1 topic rows")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("topics", help="summarize top occupations per topic")
    p.add_argument("--model", required=True)
    p.add_argument("--top-n", type=int, default=10)
    p.add_argument("--names", help="table file used to resolve "
                                   "occupation names")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_topics)

    p = sub.add_parser("compose", help="per-region topical compositions")
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_compose)

    p = sub.add_parser("prevalence", help="per-region weight of one topic")
    p.add_argument("--model", required=True)
    p.add_argument("--topic", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_prevalence)

    p = sub.add_parser("align", help="link topics across years")
    p.add_argument("--models", nargs="+", required=True,
                   help="model directories in year order")
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--method", choices=["greedy", "hungarian"],
                   default="greedy")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_align)

    p = sub.add_parser("cluster", help="hierarchically cluster regions")
    p.add_argument("--model", required=True)
    p.add_argument("--top", type=int,
                   help="cluster only the N largest regions (needs --table)")
    p.add_argument("--table", help="employment table for region sizes")
    p.add_argument("--year", type=int,
                   help="reference year for sizes (default: latest)")
    p.add_argument("--linkage", choices=list(clustering.LINKAGES),
                   default="average")
    p.add_argument("--out", required=True, help="dendrogram JSON output")
    p.add_argument("--heatmap", help="also write the ordered distance matrix")
    p.set_defaults(func=_cmd_cluster)

    p = sub.add_parser("moran", help="spatial autocorrelation per variable")
    p.add_argument("--values", required=True,
                   help="CSV with region_code plus numeric columns")
    p.add_argument("--coords", help="region_code,lat,lon CSV")
    p.add_argument("--adjacency", help="edge-list CSV instead of coordinates")
    p.add_argument("--method", choices=["knn", "inverse_distance"],
                   default="knn")
    p.add_argument("--k", type=int, default=8)
    p.add_argument("--power", type=float, default=2.0)
    p.add_argument("--no-row-standardize", dest="row_standardize",
                   action="store_false")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_moran)

    p = sub.add_parser("lq", help="location quotients by sector")
    p.add_argument("--in", dest="infile", required=True,
                   help="raw region x occupation matrix")
    p.add_argument("--sectors", required=True,
                   help="occupation_code,sector_code CSV")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_lq)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("--regions", type=int, default=60)
    p.add_argument("--occupations", type=int, default=120)
    p.add_argument("--topics", type=int, default=8)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--local-fraction", type=float, default=0.0)
    p.add_argument("--years", type=int, default=1)
    p.add_argument("--base-year", type=int, default=2014)
    p.add_argument("--drift", type=float, default=0.0)
    p.add_argument("--event", action="append",
                   help="drop:YEAR:T, merge:YEAR:A:B or split:YEAR:A:B "
                        "(repeatable)")
    p.add_argument("--out", required=True, help="corpus output directory")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("run", help="full pipeline from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="override the configured output directory")
    p.add_argument("--seed", type=int, help="override the configured seed")
    p.add_argument("--threads", type=int)
    p.set_defaults(func=_cmd_run)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except LaborscopeError as exc:
        _say(f"error: {exc}")
        return exc.exit_code
    except OSError as exc:
        _say(f"error: {exc}")
        return 3


if __name__ == "__main__":
    sys.exit(main())
