"""Output-path plumbing shared by the CSV/JSON writers."""

from __future__ import annotations

import sys
from contextlib import contextmanager
from pathlib import Path


def fmt(value) -> str:
    """Shortest decimal that parses back to exactly the same float.

    Numpy scalars repr with a type wrapper, so coerce first.
    """
    return repr(float(value))


@contextmanager
def open_output(path):
    """Open a text output destination; "-" means stdout (left open)."""
    if str(path) == "-":
        yield sys.stdout
        sys.stdout.flush()
        return
    p = Path(path)
    if p.parent and not p.parent.exists():
        p.parent.mkdir(parents=True, exist_ok=True)
    with open(p, "w", encoding="utf-8", newline="\n") as fh:
        yield fh
