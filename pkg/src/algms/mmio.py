"""Plain-text exchange formats: Matrix Market, vectors, CSV fields, JSON sidecars.

Floats are written with 17 significant digits, which round-trips IEEE doubles
exactly.
"""
import csv
import json
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import MatrixMarketError

FLOAT = "%.17g"


def write_matrix_market(path, A, symmetric=True):
    """Coordinate format; for ``symmetric`` only the lower triangle is stored."""
    A = sp.coo_matrix(A)
    n, m = A.shape
    r, c, v = A.row, A.col, A.data
    if symmetric:
        keep = r >= c
        r, c, v = r[keep], c[keep], v[keep]
    order = np.lexsort((r, c))
    r, c, v = r[order], c[order], v[order]
    kind = "symmetric" if symmetric else "general"
    with open(path, "w") as fh:
        fh.write(f"%%MatrixMarket matrix coordinate real {kind}\n")
        fh.write(f"{n} {m} {v.size}\n")
        for i, j, x in zip(r, c, v):
            fh.write(f"{i + 1} {j + 1} {FLOAT % x}\n")


def write_array(path, v):
    """Dense column vector in Matrix Market array format."""
    v = np.asarray(v, dtype=float).ravel()
    with open(path, "w") as fh:
        fh.write("%%MatrixMarket matrix array real general\n")
        fh.write(f"{v.size} 1\n")
        for x in v:
            fh.write(FLOAT % x + "\n")


def _data_lines(path):
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            yield lineno, line.rstrip("\n")


def read_matrix_market(path):
    """Read a coordinate (-> CSR matrix) or array (-> 1-D or 2-D ndarray) file.

    Raises :class:`MatrixMarketError` with the offending line number on any
    malformed or truncated input.
    """
    path = str(path)
    lines = _data_lines(path)
    try:
        lineno, header = next(lines)
    except StopIteration:
        raise MatrixMarketError(path, 1, "empty file") from None
    tokens = header.lower().split()
    if len(tokens) != 5 or tokens[0] != "%%matrixmarket" or tokens[1] != "matrix":
        raise MatrixMarketError(path, lineno, "missing %%MatrixMarket matrix header")
    fmt, field, symm = tokens[2:]
    if fmt not in ("coordinate", "array") or field not in ("real", "double", "integer"):
        raise MatrixMarketError(path, lineno, f"unsupported format {fmt} {field}")
    if symm not in ("general", "symmetric"):
        raise MatrixMarketError(path, lineno, f"unsupported symmetry {symm}")

    def body():
        for ln, line in lines:
            s = line.strip()
            if s and not s.startswith("%"):
                yield ln, s

    it = body()
    try:
        lineno, size = next(it)
    except StopIteration:
        raise MatrixMarketError(path, lineno + 1, "missing size line") from None
    try:
        dims = [int(t) for t in size.split()]
    except ValueError:
        raise MatrixMarketError(path, lineno, f"bad size line {size!r}") from None
    last = lineno

    if fmt == "coordinate":
        if len(dims) != 3:
            raise MatrixMarketError(path, lineno, "size line needs rows cols nnz")
        n, m, nnz = dims
        rows = np.empty(nnz, dtype=np.int64)
        cols = np.empty(nnz, dtype=np.int64)
        vals = np.empty(nnz)
        for k in range(nnz):
            try:
                last, s = next(it)
            except StopIteration:
                raise MatrixMarketError(path, last + 1,
                                        f"truncated: expected {nnz} entries, found {k}") from None
            parts = s.split()
            try:
                i, j, x = int(parts[0]), int(parts[1]), float(parts[2])
            except (ValueError, IndexError):
                raise MatrixMarketError(path, last, f"bad entry {s!r}") from None
            if len(parts) != 3 or not (1 <= i <= n and 1 <= j <= m):
                raise MatrixMarketError(path, last, f"bad entry {s!r}")
            rows[k], cols[k], vals[k] = i - 1, j - 1, x
        _no_trailing(it, path)
        if symm == "symmetric":
            off = rows != cols
            rows, cols, vals = (np.concatenate([rows, cols[off]]), np.concatenate([cols, rows[off]]),
                                np.concatenate([vals, vals[off]]))
        A = sp.coo_matrix((vals, (rows, cols)), shape=(n, m)).tocsr()
        A.sort_indices()
        return A

    if len(dims) != 2:
        raise MatrixMarketError(path, lineno, "size line needs rows cols")
    n, m = dims
    vals = np.empty(n * m)
    for k in range(n * m):
        try:
            last, s = next(it)
        except StopIteration:
            raise MatrixMarketError(path, last + 1,
                                    f"truncated: expected {n * m} values, found {k}") from None
        try:
            vals[k] = float(s)
        except ValueError:
            raise MatrixMarketError(path, last, f"bad value {s!r}") from None
    _no_trailing(it, path)
    out = vals.reshape(m, n).T
    return out[:, 0].copy() if m == 1 else out


def _no_trailing(it, path):
    for ln, s in it:
        raise MatrixMarketError(path, ln, f"unexpected trailing data {s!r}")


def write_vector(path, v):
    np.savetxt(path, np.asarray(v, dtype=float).ravel(), fmt=FLOAT)


def read_vector(path):
    return np.atleast_1d(np.loadtxt(path, dtype=float))


def write_grid(path, values, fmt=FLOAT):
    """2-D array as CSV, one grid row per line (rows ordered by increasing y)."""
    values = np.atleast_2d(values)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for row in values:
            w.writerow([fmt % x if fmt else x for x in row])


def read_grid(path):
    with open(path, newline="") as fh:
        return np.array([[float(x) for x in row] for row in csv.reader(fh) if row])


def write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def read_json(path):
    return json.loads(Path(path).read_text())
