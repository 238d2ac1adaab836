"""Input validation helpers used by the estimators and domain functions."""

from __future__ import annotations

import numpy as np

from .exceptions import ConfigError, DataError, NumericError


def as_float_matrix(x, name="X") -> np.ndarray:
    """Coerce to a 2-D C-contiguous float64 array, rejecting NaN/inf."""
    arr = np.ascontiguousarray(x, dtype=np.float64)
    if arr.ndim != 2:
        raise DataError(f"{name} must be 2-dimensional, got ndim={arr.ndim}")
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{name} contains NaN or infinite entries")
    return arr


def as_float_vector(x, name="values") -> np.ndarray:
    arr = np.ascontiguousarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise DataError(f"{name} must be 1-dimensional, got ndim={arr.ndim}")
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{name} contains NaN or infinite entries")
    return arr


def check_nonnegative(arr: np.ndarray, name="X") -> None:
    if arr.size and arr.min() < 0:
        raise DataError(f"{name} must be entrywise nonnegative "
                        f"(min entry {arr.min():g})")


def check_labels_match(labels, n: int, what: str) -> tuple[str, ...]:
    labels = tuple(str(c) for c in labels)
    if len(labels) != n:
        raise DataError(f"{what}: {len(labels)} labels for {n} rows/columns")
    if len(set(labels)) != len(labels):
        raise DataError(f"{what}: labels contain duplicates")
    return labels


def check_distance_matrix(d, name="distance matrix") -> np.ndarray:
    """Validate a square symmetric nonnegative matrix with zero diagonal."""
    d = as_float_matrix(d, name)
    n, m = d.shape
    if n != m:
        raise DataError(f"{name} must be square, got {n}x{m}")
    if d.size and d.min() < 0:
        raise DataError(f"{name} has negative entries (min {d.min():g})")
    if not np.allclose(d, d.T, rtol=0.0, atol=1e-12):
        raise DataError(f"{name} is not symmetric")
    if np.abs(np.diag(d)).max(initial=0.0) > 1e-12:
        raise DataError(f"{name} diagonal is not zero")
    return d


def check_positive_int(value, name: str, minimum: int = 1) -> int:
    try:
        ivalue = int(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be an integer, got {value!r}") from None
    if ivalue != value or ivalue < minimum:
        raise ConfigError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return ivalue


def check_not_constant(values: np.ndarray, name="values") -> None:
    if values.size == 0 or values.max() == values.min():
        raise NumericError(f"{name} are constant: zero variance")
