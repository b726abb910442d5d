"""
JSON file formats and deterministic table output.

Matrices are written as nested row-major lists of ``[re, im]`` pairs.  On
input a matrix may also be a flat list of ``d*d`` pairs, and every real
number may be a JSON number or a rational string such as ``"3/5"``.
NaN and Inf are rejected.

Walk file::

    {"coin_dim": 3, "nodes": [0, 1],
     "transitions": [{"from": 0, "to": 1, "matrix": [[[1, 0], ...], ...]}, ...]}

State file::

    {"coin_dim": 3, "blocks": [{"node": 0, "matrix": ...}, ...]}
"""

from __future__ import annotations

import csv
import io
import json
import math
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .core import BlockDiagonalState, OpenQuantumWalk
from .errors import OQWError, WalkStructureError

__all__ = [
    "FileFormatError",
    "NonFiniteError",
    "parse_real",
    "parse_matrix",
    "parse_vector",
    "matrix_to_json",
    "load_json",
    "walk_from_dict",
    "walk_to_dict",
    "state_from_dict",
    "state_to_dict",
    "load_walk",
    "save_walk",
    "load_state",
    "format_float",
    "emit_table",
]


class FileFormatError(OQWError, ValueError):
    """Input document is malformed."""


class NonFiniteError(FileFormatError):
    """Input contains NaN or Inf."""


def parse_real(x) -> float:
    if isinstance(x, bool):
        raise FileFormatError(f"expected a number, got {x!r}")
    if isinstance(x, (int, float)):
        v = float(x)
    elif isinstance(x, str):
        s = x.strip()
        try:
            v = float(Fraction(s)) if "/" in s else float(s)
        except (ValueError, ZeroDivisionError):
            raise FileFormatError(f"cannot parse {x!r} as a number") from None
    else:
        raise FileFormatError(f"expected a number, got {x!r}")
    if not math.isfinite(v):
        raise NonFiniteError(f"non-finite entry {x!r}")
    return v


def _parse_entry(e) -> complex:
    if isinstance(e, (list, tuple)):
        if len(e) != 2:
            raise FileFormatError(f"complex entries are [re, im] pairs, got {e!r}")
        return complex(parse_real(e[0]), parse_real(e[1]))
    return complex(parse_real(e), 0.0)


def _is_pair(e) -> bool:
    return isinstance(e, (list, tuple)) and len(e) == 2 and not any(
        isinstance(x, (list, tuple)) for x in e)


def parse_matrix(obj, dim: int | None = None) -> np.ndarray:
    """
    Nested rows, or a flat row-major list of ``[re, im]`` pairs, as a
    square complex array.  A list of exactly two pairs is read as a 2x2
    real matrix.
    """
    if not isinstance(obj, list) or not obj:
        raise FileFormatError("matrix must be a non-empty list")
    if len(obj) != 2 and all(_is_pair(e) for e in obj):
        flat = [_parse_entry(e) for e in obj]
        n = int(round(math.sqrt(len(flat))))
        if n * n != len(flat):
            raise WalkStructureError(f"flat matrix of {len(flat)} entries is not square")
        m = np.array(flat, dtype=np.complex128).reshape(n, n)
    else:
        if not all(isinstance(r, list) for r in obj):
            raise FileFormatError("matrix rows must be lists")
        rows = [[_parse_entry(e) for e in row] for row in obj]
        if any(len(r) != len(rows) for r in rows):
            raise WalkStructureError("matrix is not square")
        m = np.array(rows, dtype=np.complex128)
    if dim is not None and m.shape[0] != dim:
        raise WalkStructureError(f"expected a {dim}x{dim} matrix, got {m.shape[0]}x{m.shape[0]}")
    return m


def parse_vector(obj) -> np.ndarray:
    if isinstance(obj, str):
        obj = [s for s in obj.split(",") if s.strip()]
        return np.array([complex(s.strip().replace(" ", "")) if "j" in s
                         else parse_real(s) for s in obj], dtype=np.complex128)
    if not isinstance(obj, list) or not obj:
        raise FileFormatError("vector must be a non-empty list")
    return np.array([_parse_entry(e) for e in obj], dtype=np.complex128)


def matrix_to_json(m: np.ndarray) -> list:
    m = np.asarray(m)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def load_json(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise FileFormatError(f"cannot read {path}: {exc.strerror}") from None
    try:
        doc = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    if not isinstance(doc, dict):
        raise FileFormatError(f"{path}: top level must be an object")
    return doc


def _reject_constant(name):
    raise NonFiniteError(f"non-finite constant {name} in input")


def _require(doc: dict, key: str):
    if key not in doc:
        raise FileFormatError(f"missing field {key!r}")
    return doc[key]


def walk_from_dict(doc: dict) -> OpenQuantumWalk:
    d = int(_require(doc, "coin_dim"))
    nodes = [int(n) for n in _require(doc, "nodes")]
    trans = {}
    for t in _require(doc, "transitions"):
        key = (int(_require(t, "from")), int(_require(t, "to")))
        if key in trans:
            raise FileFormatError(f"duplicate transition {key[0]}->{key[1]}")
        trans[key] = parse_matrix(_require(t, "matrix"), d)
    return OpenQuantumWalk(tuple(nodes), d, trans)


def walk_to_dict(walk: OpenQuantumWalk) -> dict:
    return {
        "coin_dim": walk.coin_dim,
        "nodes": list(walk.nodes),
        "transitions": [
            {"from": j, "to": i, "matrix": matrix_to_json(m)}
            for (j, i), m in sorted(walk.transitions.items())
        ],
    }


def state_from_dict(doc: dict) -> BlockDiagonalState:
    d = doc.get("coin_dim")
    d = int(d) if d is not None else None
    blocks = {}
    for b in _require(doc, "blocks"):
        node = int(_require(b, "node"))
        if node in blocks:
            raise FileFormatError(f"duplicate block for node {node}")
        blocks[node] = parse_matrix(_require(b, "matrix"), d)
    if not blocks:
        raise FileFormatError("state has no blocks")
    return BlockDiagonalState(blocks)


def state_to_dict(state: BlockDiagonalState) -> dict:
    return {
        "coin_dim": state.coin_dim,
        "blocks": [{"node": n, "matrix": matrix_to_json(m)} for n, m in state.blocks.items()],
    }


def load_walk(path) -> OpenQuantumWalk:
    return walk_from_dict(load_json(path))


def save_walk(walk: OpenQuantumWalk, path) -> None:
    Path(path).write_text(json.dumps(walk_to_dict(walk), indent=1) + "\n")


def load_state(path) -> BlockDiagonalState:
    return state_from_dict(load_json(path))


# --------------------------------------------------------------------------
# tables
# --------------------------------------------------------------------------

def format_float(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def emit_table(rows: Sequence[dict], columns: Iterable[str], fmt: str = "csv", path=None) -> str:
    """
    Render ``rows`` with a fixed column order and write them to ``path``.

    ``fmt`` is ``"csv"`` (one header row, comma separated) or ``"json"``
    (a list of objects).  Floats use 17 significant digits so identical
    input gives byte-identical output.  Returns the rendered text.
    """
    columns = list(columns)
    for r in rows:
        if set(r) != set(columns):
            raise ValueError(f"row keys {sorted(r)} do not match columns {columns}")
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([format_float(r[c]) for c in columns])
        text = buf.getvalue()
    elif fmt == "json":
        items = [
            "{" + ", ".join(f"{json.dumps(c)}: {_json_scalar(r[c])}" for c in columns) + "}"
            for r in rows
        ]
        text = "[\n" + ",\n".join(" " + s for s in items) + ("\n" if items else "") + "]\n"
    else:
        raise ValueError(f"unknown table format {fmt!r}")
    if path is not None:
        Path(path).write_text(text)
    return text


def _json_scalar(x) -> str:
    if isinstance(x, str):
        return json.dumps(x)
    return format_float(x)
