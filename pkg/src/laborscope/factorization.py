"""Nonnegative matrix factorization X ~ W H under squared Frobenius loss.

The default solver is the classic multiplicative update, chosen for its
monotone objective; HALS is available as a faster alternate.  The default
initialization is deterministic (SVD-based), so fits are reproducible
without seeding.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator

from ._io import fmt
from .exceptions import ConfigError, DataError, NumericError
from .matrix import RegionOccupationMatrix
from .validation import as_float_matrix, check_labels_match, check_nonnegative

_EPS = 1e-12
SOLVERS = ("mu", "hals")
INITS = ("nndsvd", "random")


@dataclass(frozen=True)
class FitConfig:
    k: int = 15
    max_iter: int = 500
    tol: float = 1e-6
    solver: str = "mu"
    init: str = "nndsvd"
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if self.max_iter < 1:
            raise ConfigError(f"max_iter must be >= 1, got {self.max_iter}")
        if not self.tol > 0:
            raise ConfigError(f"tol must be > 0, got {self.tol}")
        if self.solver not in SOLVERS:
            raise ConfigError(f"solver must be one of {SOLVERS}, got {self.solver!r}")
        if self.init not in INITS:
            raise ConfigError(f"init must be one of {INITS}, got {self.init!r}")


def objective(x, w, h) -> float:
    """Half the squared Frobenius norm of the residual X - WH."""
    x = as_float_matrix(x, "x")
    w = as_float_matrix(w, "w")
    h = as_float_matrix(h, "h")
    if w.shape[1] != h.shape[0] or x.shape != (w.shape[0], h.shape[1]):
        raise DataError(f"shapes do not conform: x{x.shape}, w{w.shape}, h{h.shape}")
    return _objective_raw(x, w, h)


def _objective_raw(x, w, h) -> float:
    resid = x - w @ h
    return 0.5 * float(np.linalg.norm(resid, "fro") ** 2)


def nndsvd_init(x, k: int, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic nonnegative init from the leading k singular triplets.

    Each triplet contributes whichever of its (positive, positive) or
    (negative, negative) part pair carries more mass, which makes the
    result invariant to the sign ambiguity of singular vectors.  Zeros are
    then bumped to mean(x) * 1e-4 so multiplicative updates cannot lock
    entries at zero.  If the SVD fails to converge, falls back to a seeded
    random init with a warning.
    """
    x = as_float_matrix(x, "x")
    check_nonnegative(x, "x")
    n, m = x.shape
    if not 1 <= k <= min(n, m):
        raise ConfigError(f"k must be in [1, min(R, O)] = [1, {min(n, m)}], got {k}")
    try:
        u, s, vt = np.linalg.svd(x, full_matrices=False)
    except np.linalg.LinAlgError:
        warnings.warn("SVD failed to converge; using seeded random init")
        return _random_init(x, k, seed)

    w0 = np.zeros((n, k))
    h0 = np.zeros((k, m))
    # leading singular pair of a nonnegative matrix can be taken nonnegative
    w0[:, 0] = np.sqrt(s[0]) * np.abs(u[:, 0])
    h0[0, :] = np.sqrt(s[0]) * np.abs(vt[0, :])
    for j in range(1, k):
        uj, vj = u[:, j], vt[j, :]
        up, un = np.maximum(uj, 0), np.maximum(-uj, 0)
        vp, vn = np.maximum(vj, 0), np.maximum(-vj, 0)
        nup, nun = np.linalg.norm(up), np.linalg.norm(un)
        nvp, nvn = np.linalg.norm(vp), np.linalg.norm(vn)
        mass_p, mass_n = nup * nvp, nun * nvn
        if mass_p >= mass_n:
            uu, vv, mass, nu, nv = up, vp, mass_p, nup, nvp
        else:
            uu, vv, mass, nu, nv = un, vn, mass_n, nun, nvn
        if mass <= 0:
            continue
        scale = np.sqrt(s[j] * mass)
        w0[:, j] = scale * uu / nu
        h0[j, :] = scale * vv / nv
    floor = x.mean() * 1e-4
    w0[w0 == 0] = floor
    h0[h0 == 0] = floor
    return w0, h0


def _random_init(x, k: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    avg = np.sqrt(max(x.mean(), _EPS) / k)
    w0 = avg * np.abs(rng.standard_normal((x.shape[0], k)))
    h0 = avg * np.abs(rng.standard_normal((k, x.shape[1])))
    return w0, h0


def _mu_sweep(x, w, h):
    """One multiplicative-update pass over H then W (objective-monotone)."""
    h *= (w.T @ x) / (w.T @ w @ h + _EPS)
    w *= (x @ h.T) / (w @ (h @ h.T) + _EPS)
    return w, h


def _hals_sweep(x, w, h):
    """One HALS pass: coordinate descent over topic rows/columns."""
    a = w.T @ w
    b = w.T @ x
    for t in range(h.shape[0]):
        h[t] = np.maximum(0.0, h[t] + (b[t] - a[t] @ h) / max(a[t, t], _EPS))
    c = h @ h.T
    d = x @ h.T
    for t in range(w.shape[1]):
        w[:, t] = np.maximum(0.0, w[:, t] + (d[:, t] - w @ c[:, t]) / max(c[t, t], _EPS))
    return w, h


class TopicNMF(BaseEstimator):
    """NMF estimator over bare nonnegative arrays.

    Parameters
    ----------
    k : int, default 15
        Number of topics (factorization rank).
    solver : "mu" or "hals", default "mu"
        Update rule.  "mu" gives a provably non-increasing objective.
    init : "nndsvd" or "random", default "nndsvd"
        Initialization strategy.  "nndsvd" is deterministic.
    max_iter : int, default 500
    tol : float, default 1e-6
        Stop when the per-sweep objective drop, relative to the initial
        objective, falls below this.
    seed : int, default 0
        Used only by the random init.

    Attributes
    ----------
    components_ : ndarray of shape (k, n_occupations)
        The H factor.
    objective_trace_ : ndarray
        Objective before any sweep and after every sweep.
    n_iter_ : int
    converged_ : bool
    """

    def __init__(self, k=15, solver="mu", init="nndsvd", max_iter=500,
                 tol=1e-6, seed=0):
        self.k = k
        self.solver = solver
        self.init = init
        self.max_iter = max_iter
        self.tol = tol
        self.seed = seed

    def _config(self) -> FitConfig:
        return FitConfig(k=self.k, max_iter=self.max_iter, tol=self.tol,
                         solver=self.solver, init=self.init, seed=self.seed)

    def fit(self, X, y=None):
        self.fit_transform(X)
        return self

    def fit_transform(self, X, y=None):
        cfg = self._config()
        X = as_float_matrix(X, "X")
        check_nonnegative(X, "X")
        if cfg.k > min(X.shape):
            raise ConfigError(f"k={cfg.k} exceeds min(R, O)={min(X.shape)}")
        if not np.any(X > 0):
            raise DataError("degenerate input: matrix is entirely zero")

        if cfg.init == "nndsvd":
            w, h = nndsvd_init(X, cfg.k, cfg.seed)
        else:
            w, h = _random_init(X, cfg.k, cfg.seed)
        sweep = _mu_sweep if cfg.solver == "mu" else _hals_sweep

        obj0 = _objective_raw(X, w, h)
        trace = [obj0]
        denom = obj0 if obj0 > 0 else 1.0
        converged = False
        for _ in range(cfg.max_iter):
            if cfg.solver == "mu":
                w_prev, h_prev = w.copy(), h.copy()
            w, h = sweep(X, w, h)
            if w.min() < 0 or h.min() < 0:
                raise NumericError("factor went negative during updates")
            obj = _objective_raw(X, w, h)
            if not np.isfinite(obj):
                raise NumericError("factorization diverged to non-finite values")
            if cfg.solver == "mu" and obj > trace[-1] * (1 + 1e-9):
                # the update rule cannot increase the true objective, so a
                # computed increase means the residual is pure rounding
                # noise; keep the previous iterate and stop
                w, h = w_prev, h_prev
                converged = True
                break
            trace.append(obj)
            if abs(trace[-2] - trace[-1]) / denom < cfg.tol:
                converged = True
                break

        self.components_ = h
        self.objective_trace_ = np.asarray(trace)
        self.n_iter_ = len(trace) - 1
        self.converged_ = converged
        return w

    def transform(self, X):
        """Solve for W against the fitted H via multiplicative updates."""
        if not hasattr(self, "components_"):
            raise DataError("TopicNMF must be fit before transform")
        cfg = self._config()
        X = as_float_matrix(X, "X")
        check_nonnegative(X, "X")
        h = self.components_
        if X.shape[1] != h.shape[1]:
            raise DataError(f"X has {X.shape[1]} columns, model has {h.shape[1]}")
        w = np.full((X.shape[0], h.shape[0]), np.sqrt(max(X.mean(), _EPS) / h.shape[0]))
        hht = h @ h.T
        prev = _objective_raw(X, w, h)
        denom = prev if prev > 0 else 1.0
        for _ in range(cfg.max_iter):
            w *= (X @ h.T) / (w @ hht + _EPS)
            cur = _objective_raw(X, w, h)
            if abs(prev - cur) / denom < cfg.tol:
                break
            prev = cur
        return w


@dataclass(frozen=True)
class TopicModel:
    """A fitted factorization with its labels and fit diagnostics."""

    w: np.ndarray
    h: np.ndarray
    k: int
    region_labels: tuple[str, ...]
    occupation_labels: tuple[str, ...]
    objective_trace: tuple[float, ...]
    solver: str = "mu"
    init: str = "nndsvd"
    seed: int = 0
    iterations_run: int = 0
    converged: bool = False
    normalized: bool = False
    zero_topics: tuple[int, ...] = ()
    year: int | None = None

    def __post_init__(self):
        w = as_float_matrix(self.w, "w")
        h = as_float_matrix(self.h, "h")
        check_nonnegative(w, "w")
        check_nonnegative(h, "h")
        if w.shape[1] != self.k or h.shape[0] != self.k:
            raise DataError(f"factor shapes w{w.shape}, h{h.shape} do not "
                            f"match k={self.k}")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "h", h)
        object.__setattr__(
            self, "region_labels",
            check_labels_match(self.region_labels, w.shape[0], "region labels"))
        object.__setattr__(
            self, "occupation_labels",
            check_labels_match(self.occupation_labels, h.shape[1], "occupation labels"))
        trace = tuple(float(v) for v in self.objective_trace)
        if any(v < 0 for v in trace):
            raise DataError("objective trace contains negative values")
        if self.solver == "mu":
            for prev, cur in zip(trace, trace[1:]):
                if cur > prev * (1 + 1e-9):
                    raise NumericError(f"objective increased {prev} -> {cur} "
                                       f"under the monotone solver")
        object.__setattr__(self, "objective_trace", trace)
        object.__setattr__(self, "zero_topics",
                           tuple(int(t) for t in self.zero_topics))

    @property
    def n_regions(self) -> int:
        return self.w.shape[0]

    @property
    def n_occupations(self) -> int:
        return self.h.shape[1]

    @property
    def final_objective(self) -> float:
        return self.objective_trace[-1] if self.objective_trace else float("nan")


def fit_model(x: RegionOccupationMatrix, cfg: FitConfig | None = None,
              year: int | None = None) -> TopicModel:
    """Fit a TopicModel on a labeled matrix (tfidf in the standard flow,
    but any nonnegative matrix is accepted)."""
    cfg = cfg or FitConfig()
    est = TopicNMF(k=cfg.k, solver=cfg.solver, init=cfg.init,
                   max_iter=cfg.max_iter, tol=cfg.tol, seed=cfg.seed)
    w = est.fit_transform(x.values)
    return TopicModel(
        w=w, h=est.components_, k=cfg.k,
        region_labels=x.region_labels,
        occupation_labels=x.occupation_labels,
        objective_trace=tuple(est.objective_trace_),
        solver=cfg.solver, init=cfg.init, seed=cfg.seed,
        iterations_run=est.n_iter_, converged=est.converged_,
        year=year)


def normalize(model: TopicModel) -> TopicModel:
    """Rescale each H row to unit L1 mass, absorbing the inverse into W.

    The WH product is unchanged.  All-zero topic rows cannot be rescaled;
    they are left alone and flagged in zero_topics (1-based ids).
    """
    if model.normalized:
        return model
    scale = model.h.sum(axis=1)
    zero = scale <= 0
    safe = np.where(zero, 1.0, scale)
    h = model.h / safe[:, None]
    w = model.w * safe[None, :]
    return replace(model, w=w, h=h, normalized=True,
                   zero_topics=tuple(int(i) + 1 for i in np.nonzero(zero)[0]))


# ------------------------------------------------------------------ model I/O

def save_model(model: TopicModel, out_dir) -> None:
    """Write w.csv, h.csv, trace.csv and meta.json into out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    topics = [f"topic_{i}" for i in range(1, model.k + 1)]
    with open(out / "w.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("region_code," + ",".join(topics) + "\n")
        for code, row in zip(model.region_labels, model.w):
            fh.write(code + "," + ",".join(fmt(v) for v in row) + "\n")
    with open(out / "h.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("topic," + ",".join(model.occupation_labels) + "\n")
        for name, row in zip(topics, model.h):
            fh.write(name + "," + ",".join(fmt(v) for v in row) + "\n")
    with open(out / "trace.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("iteration,objective\n")
        for i, v in enumerate(model.objective_trace):
            fh.write(f"{i},{fmt(v)}\n")
    meta = {
        "k": model.k,
        "solver": model.solver,
        "init": model.init,
        "seed": model.seed,
        "iterations": model.iterations_run,
        "converged": model.converged,
        "final_objective": float(model.final_objective),
        "normalized": model.normalized,
        "zero_topics": list(model.zero_topics),
        "year": model.year,
    }
    with open(out / "meta.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _read_labeled_csv(path) -> tuple[list[str], list[str], np.ndarray]:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        row_labels, rows = [], []
        for line in fh:
            parts = line.rstrip("\n").split(",")
            if len(parts) < 2:
                continue
            row_labels.append(parts[0])
            rows.append([float(v) for v in parts[1:]])
    return row_labels, header[1:], np.array(rows, dtype=np.float64)


def load_model(model_dir) -> TopicModel:
    model_dir = Path(model_dir)
    for name in ("w.csv", "h.csv", "trace.csv", "meta.json"):
        if not (model_dir / name).exists():
            raise DataError(f"model directory {model_dir} is missing {name}")
    regions, _, w = _read_labeled_csv(model_dir / "w.csv")
    _, occupations, h = _read_labeled_csv(model_dir / "h.csv")
    with open(model_dir / "meta.json", "r", encoding="utf-8") as fh:
        meta = json.load(fh)
    trace = []
    with open(model_dir / "trace.csv", "r", encoding="utf-8") as fh:
        fh.readline()
        for line in fh:
            line = line.strip()
            if line:
                trace.append(float(line.split(",")[1]))
    return TopicModel(
        w=w, h=h, k=int(meta["k"]),
        region_labels=tuple(regions),
        occupation_labels=tuple(occupations),
        objective_trace=tuple(trace),
        solver=meta.get("solver", "mu"),
        init=meta.get("init", "nndsvd"),
        seed=int(meta.get("seed", 0)),
        iterations_run=int(meta.get("iterations", 0)),
        converged=bool(meta.get("converged", False)),
        normalized=bool(meta.get("normalized", False)),
        zero_topics=tuple(meta.get("zero_topics", ())),
        year=meta.get("year"))
