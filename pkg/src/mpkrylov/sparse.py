"""Square sparse matrices in compressed sparse row form.

The container is deliberately small: immutable-by-convention index arrays,
values in a declared storage precision, and a handful of pure operations
(matrix-vector product, precision conversion, symmetric permutation).
Mixing precisions without an explicit conversion is an error everywhere.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse

from .errors import (
    ColumnOrderError,
    DimensionMismatchError,
    EntryOutOfRangeError,
    InvalidPermutationError,
    PrecisionMismatchError,
)
from .precision import Precision

__all__ = [
    "CsrMatrix",
    "csr_from_triplets",
    "csr_from_coo",
    "spmv",
    "convert_matrix",
    "convert_vector",
    "permute_system",
    "invert_permutation",
]


class CsrMatrix:
    """Square sparse matrix stored in CSR form.

    Parameters
    ----------
    n : int
        Matrix dimension.
    row_ptr : array of int64, length n + 1
        Offsets into ``col_idx``/``values`` for each row.
    col_idx : array of int64
        Column index of every stored entry, strictly increasing inside a row.
    values : array of float32 or float64
        Stored entries. The dtype fixes the matrix precision.
    validate : bool
        Check the structural invariants on construction. Disable only for
        arrays produced by code that already guarantees them.
    """

    __slots__ = ("n", "row_ptr", "col_idx", "values", "_spview")

    def __init__(self, n, row_ptr, col_idx, values, validate=True):
        self.n = int(n)
        self.row_ptr = np.ascontiguousarray(row_ptr, dtype=np.int64)
        self.col_idx = np.ascontiguousarray(col_idx, dtype=np.int64)
        values = np.ascontiguousarray(values)
        if values.dtype not in (np.float32, np.float64):
            raise PrecisionMismatchError(
                "matrix values must be float32 or float64, got %r" % (values.dtype,)
            )
        self.values = values
        self._spview = None
        if validate:
            self.validate()

    @property
    def nnz(self) -> int:
        return int(self.values.shape[0])

    @property
    def precision(self) -> Precision:
        return Precision.from_dtype(self.values.dtype)

    def validate(self):
        """Check the CSR invariants, raising on the first violation."""
        if self.n < 0:
            raise DimensionMismatchError("matrix dimension must be nonnegative")
        if self.row_ptr.shape != (self.n + 1,):
            raise DimensionMismatchError(
                "row_ptr has length %d, expected %d" % (self.row_ptr.shape[0], self.n + 1)
            )
        if self.col_idx.shape != self.values.shape:
            raise DimensionMismatchError("col_idx and values lengths differ")
        if self.row_ptr[0] != 0 or self.row_ptr[-1] != self.col_idx.shape[0]:
            raise DimensionMismatchError("row_ptr endpoints do not match value count")
        if np.any(np.diff(self.row_ptr) < 0):
            raise DimensionMismatchError("row_ptr must be nondecreasing")
        nnz = self.nnz
        if nnz == 0:
            return
        if self.col_idx.min() < 0 or self.col_idx.max() >= self.n:
            bad = np.flatnonzero((self.col_idx < 0) | (self.col_idx >= self.n))[0]
            row = int(np.searchsorted(self.row_ptr, bad, side="right") - 1)
            raise EntryOutOfRangeError(row, self.col_idx[bad], self.values[bad], self.n)
        if nnz > 1:
            increasing = np.diff(self.col_idx) > 0
            # Entries at row starts may legitimately break the run.
            starts = self.row_ptr[1:-1]
            starts = starts[(starts > 0) & (starts < nnz)]
            increasing[starts - 1] = True
            if not increasing.all():
                raise ColumnOrderError(
                    "column indices must be strictly increasing within each row"
                )

    def to_dense(self) -> np.ndarray:
        """Expand to a dense array. Intended for small matrices and tests."""
        out = np.zeros((self.n, self.n), dtype=self.values.dtype)
        rows = np.repeat(np.arange(self.n, dtype=np.int64), np.diff(self.row_ptr))
        out[rows, self.col_idx] = self.values
        return out

    def _scipy(self) -> scipy.sparse.csr_matrix:
        """Cached scipy view sharing the value array; used for the matvec kernel."""
        if self._spview is None:
            self._spview = scipy.sparse.csr_matrix(
                (self.values, self.col_idx, self.row_ptr), shape=(self.n, self.n)
            )
        return self._spview

    def __repr__(self):
        return "CsrMatrix(n=%d, nnz=%d, %s)" % (self.n, self.nnz, self.precision.value)


def csr_from_coo(rows, cols, values, n, dtype=None) -> CsrMatrix:
    """Build a CsrMatrix from parallel coordinate arrays.

    Duplicate (row, col) pairs are summed in the value dtype. Out-of-range
    indices raise EntryOutOfRangeError naming the offending entry.
    """
    rows = np.asarray(rows, dtype=np.int64).ravel()
    cols = np.asarray(cols, dtype=np.int64).ravel()
    values = np.asarray(values, dtype=dtype).ravel()
    if values.dtype not in (np.float32, np.float64):
        values = values.astype(np.float64)
    if not (rows.shape == cols.shape == values.shape):
        raise DimensionMismatchError("coordinate arrays must have equal lengths")
    n = int(n)
    if rows.shape[0]:
        bad = (rows < 0) | (rows >= n) | (cols < 0) | (cols >= n)
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise EntryOutOfRangeError(rows[i], cols[i], values[i], n)
    if rows.shape[0] == 0:
        return CsrMatrix(
            n,
            np.zeros(n + 1, dtype=np.int64),
            np.zeros(0, dtype=np.int64),
            np.zeros(0, dtype=values.dtype),
            validate=False,
        )
    order = np.lexsort((cols, rows))
    rows = rows[order]
    cols = cols[order]
    values = values[order]
    first = np.empty(rows.shape[0], dtype=bool)
    first[0] = True
    np.not_equal(rows[1:], rows[:-1], out=first[1:])
    first[1:] |= cols[1:] != cols[:-1]
    starts = np.flatnonzero(first)
    summed = np.add.reduceat(values, starts)
    urows = rows[starts]
    ucols = cols[starts]
    counts = np.bincount(urows, minlength=n)
    row_ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=row_ptr[1:])
    return CsrMatrix(n, row_ptr, ucols, summed.astype(values.dtype, copy=False), validate=False)


def csr_from_triplets(entries, n) -> CsrMatrix:
    """Build a CsrMatrix from an iterable of (row, col, value) triplets.

    Values are stored in binary64. Duplicates are summed; out-of-range
    entries raise EntryOutOfRangeError.
    """
    triplets = list(entries)
    if not triplets:
        return csr_from_coo([], [], np.zeros(0, dtype=np.float64), n)
    arr = np.asarray(triplets, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise DimensionMismatchError("entries must be (row, col, value) triplets")
    return csr_from_coo(
        arr[:, 0].astype(np.int64), arr[:, 1].astype(np.int64), arr[:, 2], n
    )


def spmv(A: CsrMatrix, x: np.ndarray) -> np.ndarray:
    """Sparse matrix-vector product y = A x in the matrix's storage precision.

    The accumulation order is the natural row-major sweep over stored
    entries, so results are reproducible run to run. The vector must already
    be in the matrix precision; no implicit casting happens here.
    """
    x = np.asarray(x)
    if x.shape != (A.n,):
        raise DimensionMismatchError(
            "vector length %r does not match matrix dimension %d" % (x.shape, A.n)
        )
    if x.dtype != A.values.dtype:
        raise PrecisionMismatchError(
            "matrix stores %s but vector is %s" % (A.values.dtype, x.dtype)
        )
    return A._scipy().dot(x)


def convert_matrix(A: CsrMatrix, target: Precision) -> CsrMatrix:
    """Return A with values rounded to the target precision.

    The structure arrays are shared with the input; only values are copied.
    Converting to the matrix's own precision returns the input unchanged.
    """
    if target is A.precision:
        return A
    return CsrMatrix(
        A.n, A.row_ptr, A.col_idx, A.values.astype(target.dtype), validate=False
    )


def convert_vector(x: np.ndarray, target: Precision) -> np.ndarray:
    """Return a copy of x rounded to the target precision."""
    x = np.asarray(x)
    Precision.from_dtype(x.dtype)  # reject non-float storage early
    return x.astype(target.dtype, copy=True)


def invert_permutation(perm: np.ndarray) -> np.ndarray:
    """Return the inverse of a permutation of 0..n-1."""
    perm = np.asarray(perm, dtype=np.int64).ravel()
    n = perm.shape[0]
    inv = np.full(n, -1, dtype=np.int64)
    ok = (perm >= 0) & (perm < n)
    if not ok.all():
        raise InvalidPermutationError("permutation entries out of range")
    inv[perm] = np.arange(n, dtype=np.int64)
    if (inv < 0).any():
        raise InvalidPermutationError("index vector has repeated entries")
    return inv


def permute_system(A: CsrMatrix, b: np.ndarray, perm: np.ndarray):
    """Apply a symmetric permutation to a linear system.

    Returns (PAP^T, Pb) where row i of the result is row perm[i] of the
    input, i.e. the permuted matrix has entries (i, j) -> A[perm[i], perm[j]].
    """
    perm = np.asarray(perm, dtype=np.int64).ravel()
    if perm.shape[0] != A.n:
        raise InvalidPermutationError(
            "permutation length %d does not match matrix dimension %d"
            % (perm.shape[0], A.n)
        )
    inv = invert_permutation(perm)
    b = np.asarray(b)
    if b.shape != (A.n,):
        raise DimensionMismatchError("right-hand side length does not match matrix")
    rows = np.repeat(np.arange(A.n, dtype=np.int64), np.diff(A.row_ptr))
    Ap = csr_from_coo(inv[rows], inv[A.col_idx], A.values.copy(), A.n)
    return Ap, b[perm].copy()
