"""Columnar binary cache format.

Layout: 8-byte magic ``LSCOPE1\\n``, a uint32 little-endian JSON header
length, the UTF-8 JSON header, then one block per column in header order.
String columns are stored as ``uint64 count, count * uint32 byte-lengths,
concatenated UTF-8``; numeric columns as ``uint64 count`` followed by raw
little-endian values. Everything is written in a fixed order so identical
data produces identical bytes.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .exceptions import DataError

MAGIC = b"LSCOPE1\n"

_NUMERIC_DTYPES = {
    "float64": "<f8",
    "int64": "<i8",
}


def _write_str_column(fh, values) -> None:
    encoded = [str(v).encode("utf-8") for v in values]
    fh.write(struct.pack("<Q", len(encoded)))
    fh.write(np.array([len(b) for b in encoded], dtype="<u4").tobytes())
    fh.write(b"".join(encoded))


def _read_str_column(fh) -> list[str]:
    (count,) = struct.unpack("<Q", fh.read(8))
    lengths = np.frombuffer(fh.read(4 * count), dtype="<u4")
    blob = fh.read(int(lengths.sum()))
    out, pos = [], 0
    for n in lengths:
        out.append(blob[pos:pos + n].decode("utf-8"))
        pos += n
    return out


def _write_num_column(fh, values, dtype: str) -> None:
    arr = np.ascontiguousarray(values, dtype=_NUMERIC_DTYPES[dtype])
    fh.write(struct.pack("<Q", arr.size))
    fh.write(arr.tobytes())


def _read_num_column(fh, dtype: str) -> np.ndarray:
    (count,) = struct.unpack("<Q", fh.read(8))
    itemsize = np.dtype(_NUMERIC_DTYPES[dtype]).itemsize
    return np.frombuffer(fh.read(itemsize * count), dtype=_NUMERIC_DTYPES[dtype]).copy()


def write_cache(path, payload: str, meta: dict, columns: list[tuple[str, str, object]]) -> None:
    """Write a cache file.

    columns is a list of (name, dtype, values) with dtype in
    {"str", "float64", "int64"}.
    """
    header = {
        "payload": payload,
        "meta": meta,
        "columns": [{"name": name, "dtype": dtype} for name, dtype, _ in columns],
    }
    raw = json.dumps(header, sort_keys=True).encode("utf-8")
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(raw)))
        fh.write(raw)
        for _, dtype, values in columns:
            if dtype == "str":
                _write_str_column(fh, values)
            else:
                _write_num_column(fh, values, dtype)


def read_cache(path, expect_payload: str | None = None):
    """Read a cache file, returning (payload, meta, {name: values})."""
    path = Path(path)
    with open(path, "rb") as fh:
        magic = fh.read(len(MAGIC))
        if magic != MAGIC:
            raise DataError(f"{path}: not a laborscope cache file (bad magic {magic!r})")
        (hlen,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(hlen).decode("utf-8"))
        payload = header["payload"]
        if expect_payload is not None and payload != expect_payload:
            raise DataError(f"{path}: cache holds a {payload!r} payload, "
                            f"expected {expect_payload!r}")
        data = {}
        for col in header["columns"]:
            if col["dtype"] == "str":
                data[col["name"]] = _read_str_column(fh)
            else:
                data[col["name"]] = _read_num_column(fh, col["dtype"])
    return payload, header.get("meta", {}), data


def is_cache_file(path) -> bool:
    try:
        with open(path, "rb") as fh:
            return fh.read(len(MAGIC)) == MAGIC
    except OSError:
        return False
