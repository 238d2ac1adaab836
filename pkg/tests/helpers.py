"""Shared builders for the test suite."""

from __future__ import annotations

import numpy as np

from laborscope.factorization import TopicModel
from laborscope.ingest import EmploymentRecord, EmploymentTable
from laborscope.matrix import RegionOccupationMatrix


def make_records(entries):
    """Build records from (region, occupation, year, employment) tuples."""
    return tuple(
        EmploymentRecord(r, f"Region {r}", o, f"Occupation {o}", int(y), float(e))
        for r, o, y, e in entries)


def make_table(entries) -> EmploymentTable:
    return EmploymentTable(make_records(entries))


def make_matrix(values, kind="raw") -> RegionOccupationMatrix:
    values = np.asarray(values, dtype=float)
    r, o = values.shape
    return RegionOccupationMatrix(
        values,
        tuple(f"R{i:02d}" for i in range(r)),
        tuple(f"O{j:02d}" for j in range(o)),
        kind)


def make_model(w, h, year=None, solver="hals", normalized=False) -> TopicModel:
    """Wrap bare factors in a TopicModel; hals skips the monotone check."""
    w = np.asarray(w, dtype=float)
    h = np.asarray(h, dtype=float)
    k = h.shape[0]
    return TopicModel(
        w=w, h=h, k=k,
        region_labels=tuple(f"R{i:02d}" for i in range(w.shape[0])),
        occupation_labels=tuple(f"O{j:02d}" for j in range(h.shape[1])),
        objective_trace=(1.0,),
        solver=solver, year=year, normalized=normalized)


def naive_tfidf(x: np.ndarray, base: float = np.e) -> np.ndarray:
    """Entry-by-entry reference: x[r][o] * log(N / df_o), 0 when df_o = 0."""
    x = np.asarray(x, dtype=float)
    n, m = x.shape
    out = np.zeros_like(x)
    for o in range(m):
        df = sum(1 for r in range(n) if x[r, o] > 0)
        if df == 0:
            continue
        idf = np.log(n / df) / np.log(base)
        for r in range(n):
            out[r, o] = x[r, o] * idf
    return out


def linkage_distance(d: np.ndarray, members_a, members_b, linkage: str) -> float:
    """Cluster distance from original pairwise distances, by definition."""
    cross = [d[i, j] for i in members_a for j in members_b]
    if linkage == "average":
        return float(np.mean(cross))
    if linkage == "complete":
        return float(np.max(cross))
    return float(np.min(cross))


def brute_force_cluster(d: np.ndarray, linkage: str):
    """O(n^3) agglomeration oracle; ids and tie-breaks mirror the contract:
    leaves 0..n-1, merge t creates id n+t, ties take the smallest
    (min id, max id) pair."""
    n = d.shape[0]
    members = {i: frozenset([i]) for i in range(n)}
    merges = []
    for step in range(n - 1):
        best = None
        for a in sorted(members):
            for b in sorted(members):
                if a >= b:
                    continue
                dist = linkage_distance(d, members[a], members[b], linkage)
                if best is None or dist < best[0]:
                    best = (dist, a, b)
        dist, a, b = best
        m = n + step
        members[m] = members.pop(a) | members.pop(b)
        merges.append((a, b, dist, m))
    return merges


def naive_morans_i(x: np.ndarray, w: np.ndarray) -> float:
    """Double-sum reference implementation."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    z = x - x.mean()
    s0 = w.sum()
    num = 0.0
    for i in range(n):
        for j in range(n):
            num += w[i, j] * z[i] * z[j]
    return (n / s0) * num / (z @ z).item()
