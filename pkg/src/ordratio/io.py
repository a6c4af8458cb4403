"""File formats: edge lists, distance CSVs, order files, JSON sidecars and reports."""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from .orders import Order, order_from_sequence
from .spaces import FiniteMetricSpace, Graph, from_matrix, make_graph


class FormatError(ValueError):
    """Malformed input; ``line`` and ``column`` are 1-based when known."""

    def __init__(self, msg: str, line: int | None = None, column: int | None = None):
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column is not None else "") + ": "
        super().__init__(where + msg)
        self.line = line
        self.column = column


# json --------------------------------------------------------------------------------


def plain(obj):
    """Recursively convert numpy values and non-finite floats into JSON-safe values."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if hasattr(obj, "to_json"):
        return plain(obj.to_json())
    return obj


def canonical_json(obj) -> str:
    return json.dumps(plain(obj), sort_keys=True, indent=2, ensure_ascii=True) + "\n"


def write_json(path: str | Path, obj) -> None:
    Path(path).write_text(canonical_json(obj))


def read_json(path: str | Path) -> dict:
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(exc.msg, exc.lineno, exc.colno) from exc


# graphs ------------------------------------------------------------------------------


def _ints(line: str, lineno: int, count: int) -> list[int]:
    parts = line.split()
    if len(parts) != count:
        raise FormatError(f"expected {count} integers, found {len(parts)}", lineno)
    out = []
    col = 1
    for p in parts:
        col = line.index(p, col - 1) + 1
        try:
            out.append(int(p))
        except ValueError:
            raise FormatError(f"not an integer: {p!r}", lineno, col) from None
    return out


def parse_graph(text: str) -> Graph:
    """First line ``n m``, then m lines ``u v`` (0-based; ``u u`` is a loop)."""
    lines = text.splitlines()
    if not lines:
        raise FormatError("empty graph file", 1)
    n, m = _ints(lines[0], 1, 2)
    body = [(i + 2, ln) for i, ln in enumerate(lines[1:]) if ln.strip()]
    if len(body) != m:
        raise FormatError(f"header announces {m} edges, file has {len(body)}", 1)
    edges = []
    for lineno, ln in body:
        u, v = _ints(ln, lineno, 2)
        for val, col in ((u, 1), (v, 2)):
            if not 0 <= val < n:
                raise FormatError(f"vertex {val} outside 0..{n - 1}", lineno, col)
        edges.append((u, v))
    return make_graph(n, np.array(edges, dtype=np.int64).reshape(-1, 2))


def format_graph(g: Graph) -> str:
    rows = [f"{g.n} {g.m}"] + [f"{u} {v}" for u, v in g.edges.tolist()]
    return "\n".join(rows) + "\n"


def read_graph(path: str | Path) -> Graph:
    return parse_graph(Path(path).read_text())


def write_graph(path: str | Path, g: Graph) -> None:
    Path(path).write_text(format_graph(g))


def graph_from_metric(space: FiniteMetricSpace) -> Graph:
    """Edges between points at distance exactly 1 (inverse of a graph metric)."""
    M = space.full_matrix()
    u, v = np.nonzero(np.triu(M == 1.0, k=1))
    return make_graph(space.n, np.stack([u, v], axis=1))


# distance matrices ------------------------------------------------------------------------


def _fmt(x: float) -> str:
    if math.isinf(x):
        return "inf"
    if x == int(x) and abs(x) < 2 ** 53:
        return str(int(x))
    return repr(float(x))


def format_matrix(M: np.ndarray) -> str:
    return "\n".join(",".join(_fmt(float(x)) for x in row) for row in M) + "\n"


def parse_matrix(text: str) -> np.ndarray:
    rows = []
    for lineno, ln in enumerate(text.splitlines(), start=1):
        if not ln.strip():
            continue
        row = []
        for col, tok in enumerate(ln.split(","), start=1):
            tok = tok.strip()
            try:
                row.append(math.inf if tok == "inf" else float(tok))
            except ValueError:
                raise FormatError(f"not a number: {tok!r}", lineno, col) from None
        if rows and len(row) != len(rows[0]):
            raise FormatError(f"row has {len(row)} entries, expected {len(rows[0])}", lineno)
        rows.append(row)
    M = np.array(rows, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise FormatError("distance matrix must be square")
    return M


def write_space(path: str | Path, space: FiniteMetricSpace, seed: int | None = None) -> None:
    """Matrix CSV plus a JSON sidecar ``<path>.json`` with type, params and seed."""
    Path(path).write_text(format_matrix(space.full_matrix()))
    meta = space.public_meta()
    side = {"type": meta.get("type"), "params": meta.get("params", {}),
            "seed": meta.get("seed", seed)}
    write_json(str(path) + ".json", side)


def read_space(path: str | Path) -> FiniteMetricSpace:
    M = parse_matrix(Path(path).read_text())
    side = Path(str(path) + ".json")
    meta = read_json(side) if side.exists() else {}
    return from_matrix(M, meta=meta)


# orders -----------------------------------------------------------------------------------


def format_order(order: Order) -> str:
    return "\n".join(str(int(p)) for p in order.seq) + "\n"


def parse_order(text: str) -> Order:
    seq = []
    for lineno, ln in enumerate(text.splitlines(), start=1):
        tok = ln.strip()
        if not tok:
            continue
        try:
            seq.append(int(tok))
        except ValueError:
            raise FormatError(f"not a point id: {tok!r}", lineno, 1) from None
    try:
        return order_from_sequence(seq, {"constructor": "file"})
    except ValueError as exc:
        raise FormatError(str(exc)) from exc


def write_order(path: str | Path, order: Order) -> None:
    Path(path).write_text(format_order(order))


def read_order(path: str | Path) -> Order:
    return parse_order(Path(path).read_text())


# csv --------------------------------------------------------------------------------------


def format_csv(header: list[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow(["" if x is None else (_fmt(x) if isinstance(x, float) else x) for x in r])
    return buf.getvalue()


def write_csv(path: str | Path, header: list[str], rows) -> None:
    Path(path).write_text(format_csv(header, rows))
