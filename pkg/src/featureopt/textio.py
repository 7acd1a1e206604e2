"""Portable plain-text container for model parameters.

Layout::

    <kind> <version>
    meta <json object>
    array <name> <rows> <cols>
    <cols space-separated decimals>      (repeated rows times)
    ...
    end

Floats are written with ``repr`` so reading them back is bit-exact.
Vectors are stored as ``rows = 1``.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import ParseError

FORMAT_VERSION = 1


def dump(path, kind: str, meta: dict, arrays: list[tuple[str, np.ndarray]]) -> None:
    lines = [f"{kind} {FORMAT_VERSION}", "meta " + json.dumps(meta, sort_keys=True)]
    for name, a in arrays:
        a = np.atleast_2d(np.asarray(a, dtype=np.float64))
        lines.append(f"array {name} {a.shape[0]} {a.shape[1]}")
        lines.extend(" ".join(repr(float(v)) for v in row) for row in a)
    lines.append("end")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load(path, kind: str):
    """Return ``(meta, {name: 2-D array})``."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0].split()[0] != kind:
        raise ParseError(f"{path} is not a {kind} file", row=1)
    if int(lines[0].split()[1]) != FORMAT_VERSION:
        raise ParseError(f"unsupported {kind} format version", row=1)
    if not lines[1].startswith("meta "):
        raise ParseError("missing meta line", row=2)
    meta = json.loads(lines[1][5:])
    arrays = {}
    i = 2
    while i < len(lines) and lines[i] != "end":
        parts = lines[i].split()
        if len(parts) != 4 or parts[0] != "array":
            raise ParseError(f"bad array header {lines[i]!r}", row=i + 1)
        name, rows, cols = parts[1], int(parts[2]), int(parts[3])
        body = lines[i + 1:i + 1 + rows]
        if len(body) != rows:
            raise ParseError(f"array {name} truncated", row=i + 1)
        a = np.array([[float(v) for v in ln.split()] for ln in body], dtype=np.float64)
        arrays[name] = a.reshape(rows, cols)
        i += 1 + rows
    if i >= len(lines):
        raise ParseError(f"{path} has no end marker")
    return meta, arrays
