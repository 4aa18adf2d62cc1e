"""On-disk formats for matrices, embeddings, loss traces and edge lists."""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import ParseError, ValidationError

_HEADER = struct.Struct("<II")


def write_matrix_binary(path, values: np.ndarray) -> None:
    """Little-endian ``uint32 rows, uint32 cols`` header, then row-major float64."""
    values = np.ascontiguousarray(values, dtype="<f8")
    if values.ndim != 2:
        raise ValidationError("only 2-D matrices can be written")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(*values.shape))
        fh.write(values.tobytes(order="C"))


def read_matrix_binary(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise ParseError("matrix file shorter than its header")
    rows, cols = _HEADER.unpack_from(data)
    body = data[_HEADER.size:]
    if len(body) != rows * cols * 8:
        raise ParseError(f"expected {rows}x{cols} float64 values, found {len(body)} bytes")
    return np.frombuffer(body, dtype="<f8").reshape(rows, cols).copy()


def _fmt(x: float) -> str:
    return repr(float(x))


def write_matrix_csv(path, values: np.ndarray) -> None:
    with open(path, "w") as fh:
        for row in np.asarray(values, dtype=np.float64):
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def read_matrix_csv(path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", ndmin=2)


def read_matrix(path) -> np.ndarray:
    return read_matrix_csv(path) if str(path).endswith(".csv") else read_matrix_binary(path)


def write_matrix(path, values: np.ndarray) -> None:
    if str(path).endswith(".csv"):
        write_matrix_csv(path, values)
    else:
        write_matrix_binary(path, values)


def write_sidecar(path, payload: dict) -> Path:
    side = Path(str(path) + ".json")
    side.write_text(json.dumps(payload, indent=2, sort_keys=True, default=_jsonable) + "\n")
    return side


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, np.generic):
        return x.item()
    raise TypeError(f"cannot serialize {type(x).__name__}")


def write_embedding(path, U: np.ndarray) -> None:
    """First line ``n d``, then one space-separated row per node."""
    U = np.asarray(U, dtype=np.float64)
    with open(path, "w") as fh:
        fh.write(f"{U.shape[0]} {U.shape[1]}\n")
        for row in U:
            fh.write(" ".join(_fmt(x) for x in row) + "\n")


def read_embedding(path) -> np.ndarray:
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ParseError("embedding header must be 'n d'", 1)
        n, d = int(header[0]), int(header[1])
        rows = []
        for lineno, line in enumerate(fh, start=2):
            vals = line.split()
            if len(vals) != d:
                raise ParseError(f"expected {d} values, got {len(vals)}", lineno)
            rows.append([float(v) for v in vals])
    if len(rows) != n:
        raise ParseError(f"header announces {n} rows, found {len(rows)}")
    return np.asarray(rows).reshape(n, d)


def write_loss_trace(path, trace: np.ndarray) -> None:
    with open(path, "w") as fh:
        fh.write("iteration,psi\n")
        for it, val in enumerate(trace):
            fh.write(f"{it},{_fmt(val)}\n")


def write_edge_list(path, g) -> None:
    """Undirected edges with original node ids and weights."""
    ids = g.node_ids
    i, j, w = g.edge_arrays()
    with open(path, "w") as fh:
        for a, b, x in zip(i, j, w):
            fh.write(f"{ids[a]} {ids[b]} {_fmt(x)}\n")
