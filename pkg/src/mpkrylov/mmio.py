"""Reading and writing square real matrices in Matrix Market coordinate form."""

from __future__ import annotations

import numpy as np

from .errors import MatrixMarketError
from .sparse import CsrMatrix, csr_from_coo

__all__ = ["read_matrix_market", "write_matrix_market", "read_matrix_market_header"]

_BANNER = "%%matrixmarket"


def _parse_header_line(line, path):
    tokens = line.strip().split()
    if len(tokens) != 5 or tokens[0].lower() != _BANNER:
        raise MatrixMarketError("malformed header line %r" % line.strip(), path, 1)
    obj, fmt, field, symmetry = (t.lower() for t in tokens[1:])
    if obj != "matrix":
        raise MatrixMarketError("unsupported object %r" % obj, path, 1)
    if fmt != "coordinate":
        raise MatrixMarketError("only coordinate format is supported, got %r" % fmt, path, 1)
    if field not in ("real", "integer"):
        raise MatrixMarketError(
            "only real-valued matrices are supported, got field %r" % field, path, 1
        )
    if symmetry not in ("general", "symmetric"):
        raise MatrixMarketError("unsupported symmetry %r" % symmetry, path, 1)
    return symmetry


def read_matrix_market_header(path):
    """Return (n, stored_entries, symmetry) from the file header alone."""
    with open(path, "r", encoding="ascii") as f:
        symmetry = _parse_header_line(f.readline(), path)
        lineno = 1
        for line in f:
            lineno += 1
            stripped = line.strip()
            if not stripped or stripped.startswith("%"):
                continue
            parts = stripped.split()
            if len(parts) != 3:
                raise MatrixMarketError("malformed size line %r" % stripped, path, lineno)
            try:
                rows, cols, nnz = (int(p) for p in parts)
            except ValueError:
                raise MatrixMarketError("malformed size line %r" % stripped, path, lineno)
            if rows != cols:
                raise MatrixMarketError(
                    "matrix is %d-by-%d but only square matrices are supported" % (rows, cols),
                    path,
                )
            return rows, nnz, symmetry
    raise MatrixMarketError("missing size line", path)


def read_matrix_market(path) -> CsrMatrix:
    """Read a square real coordinate-format matrix into binary64 CSR.

    Symmetric storage is expanded, duplicate entries are summed, and indices
    are converted from the file's 1-based convention. Pattern and complex
    fields, non-square shapes, and malformed lines all raise
    MatrixMarketError.
    """
    with open(path, "r", encoding="ascii") as f:
        symmetry = _parse_header_line(f.readline(), path)
        size = None
        for line in f:
            stripped = line.strip()
            if not stripped or stripped.startswith("%"):
                continue
            size = stripped.split()
            break
        if size is None:
            raise MatrixMarketError("missing size line", path)
        if len(size) != 3:
            raise MatrixMarketError("malformed size line %r" % " ".join(size), path)
        try:
            rows, cols, nnz = (int(p) for p in size)
        except ValueError:
            raise MatrixMarketError("malformed size line %r" % " ".join(size), path)
        if rows != cols:
            raise MatrixMarketError(
                "matrix is %d-by-%d but only square matrices are supported" % (rows, cols),
                path,
            )
        try:
            data = np.loadtxt(f, dtype=np.float64, comments="%", ndmin=2)
        except ValueError as exc:
            raise MatrixMarketError("malformed entry: %s" % exc, path)
    if data.size == 0:
        data = data.reshape(0, 3)
    if data.shape[1] != 3:
        raise MatrixMarketError(
            "each entry needs 'row col value', got %d fields" % data.shape[1], path
        )
    if data.shape[0] != nnz:
        raise MatrixMarketError(
            "header declares %d entries but file has %d" % (nnz, data.shape[0]), path
        )
    i = data[:, 0]
    j = data[:, 1]
    if not (np.equal(np.floor(i), i).all() and np.equal(np.floor(j), j).all()):
        raise MatrixMarketError("indices must be integers", path)
    i = i.astype(np.int64) - 1
    j = j.astype(np.int64) - 1
    v = data[:, 2]
    if symmetry == "symmetric":
        off = i != j
        i, j, v = (
            np.concatenate([i, j[off]]),
            np.concatenate([j, i[off]]),
            np.concatenate([v, v[off]]),
        )
    return csr_from_coo(i, j, v, rows)


def write_matrix_market(A: CsrMatrix, path):
    """Write A in coordinate general form with 17 significant digits.

    The precision is enough to round-trip binary64 values exactly.
    """
    rows = np.repeat(np.arange(A.n, dtype=np.int64), np.diff(A.row_ptr)) + 1
    cols = A.col_idx + 1
    with open(path, "w", encoding="ascii") as f:
        f.write("%%MatrixMarket matrix coordinate real general\n")
        f.write("%d %d %d\n" % (A.n, A.n, A.nnz))
        vals = A.values.astype(np.float64, copy=False)
        for r, c, v in zip(rows.tolist(), cols.tolist(), vals.tolist()):
            f.write("%d %d %.16e\n" % (r, c, v))
