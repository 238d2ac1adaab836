"""Human-readable views of a fitted model: topic summaries, per-region
topical compositions, and per-topic prevalence rankings."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._io import fmt, open_output
from .exceptions import ConfigError
from .factorization import TopicModel, normalize


@dataclass(frozen=True)
class TopicSummary:
    """One topic's strongest occupations, weight-descending."""

    topic_id: int
    top_occupations: tuple[tuple[str, str, float], ...]
    label: str = ""


@dataclass(frozen=True)
class RegionComposition:
    """A region's share of each topic (L1-normalized W row).

    raw_weights keeps the unnormalized row so size-sensitive views stay
    reproducible.  Rows with no topic mass at all are flagged is_zero and
    carry no dominant topic.
    """

    region_code: str
    weights: tuple[float, ...]
    raw_weights: tuple[float, ...]
    dominant_topic: int | None
    is_zero: bool = False


def summarize_topics(model: TopicModel, n: int = 10,
                     names: dict[str, str] | None = None,
                     labels: dict[int, str] | None = None) -> list[TopicSummary]:
    """Top-n occupations per topic from the normalized H rows.

    Ties break lexicographically by occupation code; zero-weight entries
    are suppressed rather than padded.  Occupation names come from the
    optional code->name mapping, defaulting to the code itself.
    """
    if n < 1:
        raise ConfigError(f"n must be positive, got {n}")
    if n > model.n_occupations:
        warnings.warn(f"n={n} exceeds {model.n_occupations} occupations; truncating")
        n = model.n_occupations
    model = normalize(model)
    names = names or {}
    labels = labels or {}
    out = []
    for t in range(model.k):
        row = model.h[t]
        ranked = sorted(zip(model.occupation_labels, row),
                        key=lambda p: (-p[1], p[0]))
        top = tuple((code, names.get(code, code), float(wt))
                    for code, wt in ranked[:n] if wt > 0)
        out.append(TopicSummary(t + 1, top, labels.get(t + 1, "")))
    return out


def compose_regions(model: TopicModel) -> list[RegionComposition]:
    """L1-normalize each region's W row into a topic composition."""
    model = normalize(model)
    out = []
    for code, row in zip(model.region_labels, model.w):
        total = float(row.sum())
        if total <= 0:
            out.append(RegionComposition(code, tuple(0.0 for _ in row),
                                         tuple(float(v) for v in row),
                                         dominant_topic=None, is_zero=True))
        else:
            weights = row / total
            out.append(RegionComposition(code, tuple(float(v) for v in weights),
                                         tuple(float(v) for v in row),
                                         dominant_topic=int(np.argmax(weights)) + 1))
    return out


def topic_prevalence(model: TopicModel, topic_id: int) -> list[tuple[str, float]]:
    """The topic's normalized weight per region, sorted descending.

    Ties break lexicographically by region code.
    """
    if not 1 <= topic_id <= model.k:
        raise ConfigError(f"topic_id must be in [1, {model.k}], got {topic_id}")
    comps = compose_regions(model)
    pairs = [(c.region_code, c.weights[topic_id - 1]) for c in comps]
    pairs.sort(key=lambda p: (-p[1], p[0]))
    return pairs


# ------------------------------------------------------------------ file I/O

def write_topics_json(summaries: list[TopicSummary], path) -> None:
    payload = [
        {"topic_id": s.topic_id,
         "label": s.label,
         "top": [{"code": c, "name": n, "weight": w}
                 for c, n, w in s.top_occupations]}
        for s in summaries
    ]
    with open_output(path) as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_compositions_csv(comps: list[RegionComposition], path) -> None:
    if not comps:
        raise ConfigError("no compositions to write")
    k = len(comps[0].weights)
    cols = [f"topic_{i}" for i in range(1, k + 1)]
    raw_cols = [f"raw_topic_{i}" for i in range(1, k + 1)]
    with open_output(path) as fh:
        fh.write("region_code,dominant_topic,is_zero,"
                 + ",".join(cols) + "," + ",".join(raw_cols) + "\n")
        for c in comps:
            dom = "" if c.dominant_topic is None else str(c.dominant_topic)
            fh.write(c.region_code + f",{dom},{int(c.is_zero)},"
                     + ",".join(fmt(v) for v in c.weights) + ","
                     + ",".join(fmt(v) for v in c.raw_weights) + "\n")


def read_compositions_csv(path) -> list[RegionComposition]:
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        k = sum(1 for h in header if h.startswith("topic_"))
        out = []
        for line in fh:
            parts = line.rstrip("\n").split(",")
            if len(parts) < 3 + 2 * k:
                continue
            weights = tuple(float(v) for v in parts[3:3 + k])
            raw = tuple(float(v) for v in parts[3 + k:3 + 2 * k])
            dom = int(parts[1]) if parts[1] else None
            out.append(RegionComposition(parts[0], weights, raw, dom,
                                         bool(int(parts[2]))))
    return out


def write_prevalence_csv(pairs: list[tuple[str, float]], path) -> None:
    with open_output(path) as fh:
        fh.write("region_code,weight\n")
        for code, weight in pairs:
            fh.write(f"{code},{fmt(weight)}\n")
