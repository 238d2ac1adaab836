"""Alignment of topic models across years.

Topics from consecutive years are linked when the cosine similarity of
their occupation rows strictly exceeds a threshold alpha; an injective
order map then carries topic numbering forward so persistent topics keep
one id over time, while unmatched topics start or end chains.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from ._io import open_output
from .exceptions import ConfigError, DataError
from .factorization import TopicModel
from .validation import as_float_vector

METHODS = ("greedy", "hungarian")


def cosine_similarity(u, v) -> float:
    """u.v / (|u||v|); exactly 1.0 for bitwise-equal vectors.

    Nonnegative inputs give a value in [0, 1]; rounding noise is clipped.
    Zero vectors have no direction and raise.
    """
    u = as_float_vector(u, "u")
    v = as_float_vector(v, "v")
    if u.shape != v.shape:
        raise DataError(f"length mismatch: {u.shape[0]} vs {v.shape[0]}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise DataError("undefined similarity for a zero vector")
    if np.array_equal(u, v):
        return 1.0
    s = float(u @ v) / (nu * nv)
    lo = 0.0 if (u.min() >= 0 and v.min() >= 0) else -1.0
    return min(1.0, max(lo, s))


@dataclass(frozen=True)
class TopicAlignment:
    """Thresholded similarity graph over one or more year pairs.

    edges: (year_a, topic_a, year_b, topic_b, similarity), similarity > alpha.
    order_maps: per year pair, injective (topic_a, topic_b) assignments.
    chains: per persistent id, the (year, topic_id) nodes it passes through.
    Topic ids are 1-based.
    """

    year_pairs: tuple[tuple[int, int], ...]
    edges: tuple[tuple[int, int, int, int, float], ...]
    alpha: float
    order_maps: tuple[tuple[tuple[int, int], ...], ...]
    nodes: tuple[tuple[int, int], ...]
    chains: tuple[tuple[tuple[int, int], ...], ...] = ()

    def __post_init__(self):
        if len(self.order_maps) != len(self.year_pairs):
            raise DataError("one order map required per year pair")
        for _, _, _, _, sim in self.edges:
            if not sim > self.alpha:
                raise DataError(f"edge similarity {sim} does not exceed "
                                f"alpha={self.alpha}")
        for pairs in self.order_maps:
            sources = [a for a, _ in pairs]
            targets = [b for _, b in pairs]
            if len(set(sources)) != len(sources) or len(set(targets)) != len(targets):
                raise DataError("order map is not injective")

    def order_map(self, year_a: int, year_b: int) -> dict[int, int]:
        for (ya, yb), pairs in zip(self.year_pairs, self.order_maps):
            if (ya, yb) == (year_a, year_b):
                return dict(pairs)
        raise DataError(f"no alignment for year pair ({year_a}, {year_b})")


def _check_occupations(a: TopicModel, b: TopicModel) -> None:
    if a.occupation_labels == b.occupation_labels:
        return
    sa, sb = set(a.occupation_labels), set(b.occupation_labels)
    diff = sorted(sa ^ sb)
    if diff:
        raise DataError(f"occupation labels differ between models; "
                        f"symmetric difference: {diff}")
    raise DataError("models share occupation labels but in different order; "
                    "re-index before aligning")


def _similarity_edges(a: TopicModel, b: TopicModel, alpha: float):
    """All super-threshold (i, j, sim) pairs, 0-based; zero rows link nothing."""
    edges = []
    nz_a = [i for i in range(a.k) if a.h[i].any()]
    nz_b = [j for j in range(b.k) if b.h[j].any()]
    for i in nz_a:
        for j in nz_b:
            sim = cosine_similarity(a.h[i], b.h[j])
            if sim > alpha:
                edges.append((i, j, sim))
    return edges


def _match(edges, method: str) -> list[tuple[int, int, float]]:
    """Injective matching over super-threshold edges."""
    if method == "greedy":
        chosen = []
        used_a: set[int] = set()
        used_b: set[int] = set()
        for i, j, sim in sorted(edges, key=lambda e: (-e[2], e[0], e[1])):
            if i not in used_a and j not in used_b:
                chosen.append((i, j, sim))
                used_a.add(i)
                used_b.add(j)
        return sorted(chosen)
    # hungarian: maximize total similarity, then drop sub-threshold pairs
    if not edges:
        return []
    na = max(i for i, _, _ in edges) + 1
    nb = max(j for _, j, _ in edges) + 1
    cost = np.zeros((na, nb))
    sims = {}
    for i, j, sim in edges:
        cost[i, j] = -sim
        sims[(i, j)] = sim
    rows, cols = linear_sum_assignment(cost)
    return sorted((i, j, sims[(i, j)]) for i, j in zip(rows, cols)
                  if (i, j) in sims)


def align(model_a: TopicModel, model_b: TopicModel, alpha: float = 0.5,
          method: str = "greedy") -> TopicAlignment:
    """Align two models' topics: edges above alpha plus an order map.

    The order map is a greedy global-max matching by default (repeatedly
    take the most similar unmatched pair); "hungarian" solves the optimal
    assignment instead.  Years come from the models when both carry one,
    else the pair is labeled (0, 1).
    """
    if not -1.0 <= alpha <= 1.0:
        raise ConfigError(f"alpha must be in [-1, 1], got {alpha}")
    if method not in METHODS:
        raise ConfigError(f"method must be one of {METHODS}, got {method!r}")
    _check_occupations(model_a, model_b)
    if model_a.year is not None and model_b.year is not None:
        ya, yb = int(model_a.year), int(model_b.year)
    else:
        ya, yb = 0, 1
    raw = _similarity_edges(model_a, model_b, alpha)
    edges = tuple((ya, i + 1, yb, j + 1, sim) for i, j, sim in sorted(raw))
    order = tuple((i + 1, j + 1) for i, j, _ in _match(raw, method))
    nodes = tuple((ya, t + 1) for t in range(model_a.k)) + \
        tuple((yb, t + 1) for t in range(model_b.k))
    return TopicAlignment(((ya, yb),), edges, float(alpha), (order,), nodes)


def chain(models: list[TopicModel], alpha: float = 0.5,
          method: str = "greedy") -> TopicAlignment:
    """Concatenate consecutive-year alignments and track persistent topics.

    A topic matched by the order map keeps its chain; an unmatched target
    starts a fresh chain ("emerged"); an unmatched source just ends
    ("vanished or merged").  Models are ordered by their year when every
    model has one, otherwise by position.
    """
    if len(models) < 2:
        raise ConfigError(f"chain needs at least 2 models, got {len(models)}")
    if all(m.year is not None for m in models):
        years = [int(m.year) for m in models]
        if len(set(years)) != len(years):
            raise DataError(f"duplicate model years: {sorted(years)}")
        models = sorted(models, key=lambda m: m.year)
        years = sorted(years)
    else:
        years = list(range(len(models)))

    year_pairs, edges, order_maps, nodes = [], [], [], []
    for t in range(models[0].k):
        nodes.append((years[0], t + 1))
    chain_of = {(years[0], t + 1): t + 1 for t in range(models[0].k)}
    next_id = models[0].k + 1

    for idx in range(len(models) - 1):
        a, b = models[idx], models[idx + 1]
        ya, yb = years[idx], years[idx + 1]
        _check_occupations(a, b)
        raw = _similarity_edges(a, b, alpha)
        edges.extend((ya, i + 1, yb, j + 1, sim) for i, j, sim in sorted(raw))
        matched = _match(raw, method)
        order_maps.append(tuple((i + 1, j + 1) for i, j, _ in matched))
        year_pairs.append((ya, yb))
        carried = {j + 1: i + 1 for i, j, _ in matched}
        for t in range(b.k):
            nodes.append((yb, t + 1))
            if t + 1 in carried:
                chain_of[(yb, t + 1)] = chain_of[(ya, carried[t + 1])]
            else:
                chain_of[(yb, t + 1)] = next_id
                next_id += 1

    by_chain: dict[int, list[tuple[int, int]]] = {}
    for node, cid in chain_of.items():
        by_chain.setdefault(cid, []).append(node)
    chains = tuple(tuple(sorted(by_chain[cid])) for cid in sorted(by_chain))
    return TopicAlignment(tuple(year_pairs), tuple(edges), float(alpha),
                          tuple(order_maps), tuple(nodes), chains)


def write_alignment_json(alignment: TopicAlignment, path,
                         labels: dict[tuple[int, int], str] | None = None) -> None:
    labels = labels or {}
    payload = {
        "alpha": alignment.alpha,
        "years": sorted({y for y, _ in alignment.nodes}),
        "nodes": [{"year": y, "topic_id": t, "label": labels.get((y, t), "")}
                  for y, t in sorted(alignment.nodes)],
        "edges": [{"year_a": ya, "topic_a": ta, "year_b": yb, "topic_b": tb,
                   "similarity": sim}
                  for ya, ta, yb, tb, sim in alignment.edges],
        "order_maps": [{"year_a": ya, "year_b": yb,
                        "pairs": [[a, b] for a, b in pairs]}
                       for (ya, yb), pairs in zip(alignment.year_pairs,
                                                  alignment.order_maps)],
        "chains": [[{"year": y, "topic_id": t} for y, t in ch]
                   for ch in alignment.chains],
    }
    with open_output(path) as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
