"""TF-IDF weighting of region/occupation employment matrices.

An occupation's weight in a region is its raw employment count scaled by
ln(N / df), where df counts the regions employing anyone in it at all.
Occupations found everywhere carry zero weight; rare ones are amplified.
"""

from __future__ import annotations

import warnings

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .exceptions import ConfigError, DataError
from .matrix import RegionOccupationMatrix
from .validation import as_float_matrix, check_nonnegative

LOG_BASES = {"e": np.e, "2": 2.0, "10": 10.0}


def _resolve_base(log_base) -> float:
    key = str(log_base).lower()
    if key not in LOG_BASES:
        raise ConfigError(f"log base must be one of {sorted(LOG_BASES)}, "
                          f"got {log_base!r}")
    return LOG_BASES[key]


class TfidfWeighter(BaseEstimator, TransformerMixin):
    """Column-frequency weighting learned from a nonnegative count matrix.

    Parameters
    ----------
    log_base : "e", "2" or "10" (default "e")
        Base of the idf logarithm.  Changing it rescales every weight by
        the same constant and cannot change within-region rankings.

    Attributes
    ----------
    n_regions_ : int
        Rows seen during fit.
    df_ : ndarray of shape (n_occupations,)
        Regions with strictly positive count per column.
    idf_ : ndarray of shape (n_occupations,)
        log(N / df) per column; 0 where df is 0 (empty columns stay empty).
    """

    def __init__(self, log_base="e"):
        self.log_base = log_base

    def fit(self, X, y=None):
        base = _resolve_base(self.log_base)
        X = as_float_matrix(X, "X")
        check_nonnegative(X, "X")
        self.n_regions_ = X.shape[0]
        self.df_ = np.count_nonzero(X > 0, axis=0).astype(np.int64)
        idf = np.zeros(X.shape[1])
        pos = self.df_ > 0
        idf[pos] = np.log(self.n_regions_ / self.df_[pos]) / np.log(base)
        self.idf_ = idf
        return self

    def transform(self, X):
        if not hasattr(self, "idf_"):
            raise DataError("TfidfWeighter must be fit before transform")
        X = as_float_matrix(X, "X")
        check_nonnegative(X, "X")
        if X.shape[1] != self.idf_.shape[0]:
            raise DataError(f"X has {X.shape[1]} columns, "
                            f"weighter was fit on {self.idf_.shape[0]}")
        return X * self.idf_


def document_frequency(x: RegionOccupationMatrix) -> np.ndarray:
    """Per-occupation count of regions with strictly positive employment."""
    if x.kind != "raw":
        raise DataError(f"document_frequency expects a raw matrix, got kind={x.kind!r}")
    return np.count_nonzero(x.values > 0, axis=0).astype(np.int64)


def tfidf(x: RegionOccupationMatrix, log_base="e",
          prune_empty: bool = False) -> RegionOccupationMatrix:
    """Weight a raw employment matrix; see module docstring for the scheme.

    With prune_empty, columns with zero support everywhere are dropped
    from the output instead of kept as all-zero columns.
    """
    if x.kind != "raw":
        raise DataError(f"tfidf expects a raw matrix, got kind={x.kind!r}")
    weighter = TfidfWeighter(log_base=log_base).fit(x.values)
    values = weighter.transform(x.values)
    labels = x.occupation_labels
    if prune_empty:
        keep = weighter.df_ > 0
        values = values[:, keep]
        labels = tuple(c for c, k in zip(labels, keep) if k)
    return RegionOccupationMatrix(values, x.region_labels, labels, "tfidf")


def top_k_by_region(x: RegionOccupationMatrix, region: str,
                    k: int) -> list[tuple[str, float]]:
    """The k highest-scoring occupations for one region, descending.

    Ties break lexicographically by occupation code.
    """
    if x.kind != "tfidf":
        raise DataError(f"top_k_by_region expects a tfidf matrix, got kind={x.kind!r}")
    if k < 1:
        raise ConfigError(f"k must be positive, got {k}")
    row = x.row(region)
    if k > len(row):
        warnings.warn(f"k={k} exceeds {len(row)} occupations; truncating")
        k = len(row)
    ranked = sorted(zip(x.occupation_labels, row), key=lambda t: (-t[1], t[0]))
    return [(code, float(score)) for code, score in ranked[:k]]
