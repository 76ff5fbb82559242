"""Dense vector kernels and the small least-squares machinery behind Arnoldi.

Everything here runs in one declared precision; vectors of another dtype
are rejected rather than cast. The KrylovBasis preallocates its storage
column-major so that growing-basis products map onto single GEMV calls.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import (
    ColumnOrderError,
    DimensionMismatchError,
    PrecisionMismatchError,
    TriangularBreakdownError,
)
from .precision import Precision

__all__ = ["dot", "norm2", "axpy", "scale", "KrylovBasis", "cgs2_append", "HessenbergSystem"]


def _check_pair(x, y):
    if x.shape != y.shape or x.ndim != 1:
        raise DimensionMismatchError("vectors must be 1-d and of equal length")
    if x.dtype != y.dtype:
        raise PrecisionMismatchError("vector dtypes differ: %s vs %s" % (x.dtype, y.dtype))


def dot(x, y):
    """Inner product in the vectors' common precision."""
    _check_pair(x, y)
    return np.dot(x, y)


def norm2(x):
    """Euclidean norm, accumulated in the vector's own precision."""
    if x.ndim != 1:
        raise DimensionMismatchError("norm2 expects a 1-d vector")
    return np.sqrt(np.dot(x, x))


def axpy(alpha, x, y):
    """Return y + alpha * x without modifying the inputs."""
    _check_pair(x, y)
    return y + x.dtype.type(alpha) * x


def scale(alpha, x):
    """Return alpha * x in x's precision."""
    return x.dtype.type(alpha) * x


class KrylovBasis:
    """Fixed-capacity collection of orthonormal basis vectors.

    Storage is a preallocated (length, capacity) Fortran-ordered block;
    ``columns(k)`` is a view of the first k vectors, cheap to hand to BLAS.
    """

    __slots__ = ("length", "capacity", "precision", "count", "_data")

    def __init__(self, length, capacity, precision: Precision):
        if capacity < 1 or length < 1:
            raise DimensionMismatchError("basis needs positive length and capacity")
        self.length = int(length)
        self.capacity = int(capacity)
        self.precision = precision
        self.count = 0
        self._data = np.zeros((self.length, self.capacity), dtype=precision.dtype, order="F")

    def append(self, v):
        if self.count >= self.capacity:
            raise DimensionMismatchError("basis is full (capacity %d)" % self.capacity)
        if v.shape != (self.length,):
            raise DimensionMismatchError("vector length does not match basis")
        if v.dtype != self._data.dtype:
            raise PrecisionMismatchError(
                "basis stores %s but vector is %s" % (self._data.dtype, v.dtype)
            )
        self._data[:, self.count] = v
        self.count += 1

    def column(self, j):
        if not 0 <= j < self.count:
            raise DimensionMismatchError("column %d not in basis of size %d" % (j, self.count))
        return self._data[:, j]

    def columns(self, k=None):
        if k is None:
            k = self.count
        if not 0 <= k <= self.count:
            raise DimensionMismatchError("requested %d columns, have %d" % (k, self.count))
        return self._data[:, :k]


def cgs2_append(basis: KrylovBasis, w):
    """Orthogonalize w against the basis with two classical Gram-Schmidt passes.

    Returns ``(coeffs, beta, appended)`` where ``coeffs`` holds the summed
    projection coefficients of both passes, ``beta`` the norm of the
    remainder, and ``appended`` tells whether the normalized remainder was
    added to the basis. The remainder is declared a breakdown, and nothing
    is appended, when beta <= length * u * ||w||.
    """
    if basis.count < 1:
        raise DimensionMismatchError("basis must hold at least one vector")
    if w.shape != (basis.length,):
        raise DimensionMismatchError("vector length does not match basis")
    dtype = basis.precision.dtype
    if w.dtype != dtype:
        raise PrecisionMismatchError("basis stores %s but vector is %s" % (dtype, w.dtype))
    w_norm = norm2(w)
    V = basis.columns()
    c1 = V.T @ w
    w = w - V @ c1
    c2 = V.T @ w
    w = w - V @ c2
    coeffs = c1 + c2
    beta = norm2(w)
    threshold = basis.length * basis.precision.unit_roundoff * float(w_norm)
    appended = float(beta) > threshold
    if appended:
        basis.append(w / beta)
    return coeffs, beta, appended


def _givens(a, b, dtype):
    """Rotation (c, s, r) with c*a + s*b = r and -s*a + c*b = 0."""
    one = dtype.type(1.0)
    zero = dtype.type(0.0)
    if b == 0:
        return one, zero, a
    r = np.hypot(a, b)
    return a / r, b / r, r


class HessenbergSystem:
    """Least-squares state for the projected problem min ||gamma e1 - Hbar d||.

    Columns arrive one at a time via :meth:`update`, which applies all
    previous Givens rotations, creates one new rotation to annihilate the
    subdiagonal, and rotates the right-hand side. The absolute value of the
    trailing right-hand-side entry then equals the current residual norm of
    the projected problem, reported relative to ``norm_scale``.
    """

    def __init__(self, m, gamma, norm_scale=None, precision=Precision.binary64):
        if m < 1:
            raise DimensionMismatchError("need room for at least one column")
        dtype = precision.dtype
        self.m = int(m)
        self.precision = precision
        self.h = np.zeros((self.m + 1, self.m), dtype=dtype)
        self.cos = np.zeros(self.m, dtype=dtype)
        self.sin = np.zeros(self.m, dtype=dtype)
        self.g = np.zeros(self.m + 1, dtype=dtype)
        self.g[0] = gamma
        self.gamma = float(gamma)
        self.norm_scale = float(gamma if norm_scale is None else norm_scale)
        if self.norm_scale <= 0:
            raise DimensionMismatchError("norm_scale must be positive")
        self.count = 0

    def update(self, j, coeffs, beta):
        """Fold in column j (1-based) and return the implicit relative residual."""
        if j != self.count + 1:
            raise ColumnOrderError(
                "expected column %d, got %d" % (self.count + 1, j)
            )
        if j > self.m:
            raise DimensionMismatchError("system already holds %d columns" % self.m)
        coeffs = np.asarray(coeffs)
        if coeffs.shape != (j,):
            raise DimensionMismatchError("column %d needs %d coefficients" % (j, j))
        dtype = self.h.dtype
        if coeffs.dtype != dtype:
            raise PrecisionMismatchError("coefficients must be %s" % dtype)
        col = np.zeros(self.m + 1, dtype=dtype)
        col[:j] = coeffs
        col[j] = beta
        for k in range(j - 1):
            t = self.cos[k] * col[k] + self.sin[k] * col[k + 1]
            col[k + 1] = -self.sin[k] * col[k] + self.cos[k] * col[k + 1]
            col[k] = t
        c, s, r = _givens(col[j - 1], col[j], dtype)
        self.cos[j - 1] = c
        self.sin[j - 1] = s
        col[j - 1] = r
        col[j] = 0
        self.g[j] = -s * self.g[j - 1]
        self.g[j - 1] = c * self.g[j - 1]
        self.h[:, j - 1] = col
        self.count = j
        return float(np.abs(self.g[j])) / self.norm_scale

    def residual_norm(self):
        """Absolute implicit residual norm after the last update."""
        return float(np.abs(self.g[self.count]))

    def solve(self, k=None):
        """Back-substitute the rotated triangle for the first k coefficients."""
        if self.count == 0:
            raise ColumnOrderError("no columns processed yet")
        if k is None:
            k = self.count
        if not 1 <= k <= self.count:
            raise DimensionMismatchError("cannot solve for %d of %d columns" % (k, self.count))
        R = self.h[:k, :k]
        diag = np.abs(np.diagonal(R))
        threshold = k * self.precision.unit_roundoff * float(diag.max(initial=0.0))
        small = int(np.argmin(diag)) if k else 0
        if diag.size == 0 or float(diag.min()) <= threshold:
            raise TriangularBreakdownError(small, diag[small], threshold)
        return scipy.linalg.solve_triangular(R, self.g[:k], lower=False)
