"""Right preconditioners: identity, block Jacobi, and a GMRES polynomial.

All handles expose ``apply(v) -> vector`` in a single declared precision and
never mutate their input. They are linear operators by construction, which
the solver relies on when it applies them once per Arnoldi step and once
more to the correction.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import (
    DimensionMismatchError,
    PolynomialBreakdownError,
    PrecisionMismatchError,
    SingularBlockError,
)
from .kernels import KrylovBasis, cgs2_append, norm2
from .precision import Precision
from .sparse import CsrMatrix, spmv

__all__ = [
    "PreconditionerHandle",
    "IdentityPreconditioner",
    "identity",
    "BlockJacobiData",
    "BlockJacobiPreconditioner",
    "build_block_jacobi",
    "apply_block_jacobi",
    "GmresPolyData",
    "PolynomialPreconditioner",
    "build_gmres_poly",
    "apply_gmres_poly",
    "parse_precond_spec",
]


class PreconditionerHandle:
    """Base class: apply() validates shape and dtype, then delegates."""

    kind = "abstract"

    def __init__(self, n, precision: Precision):
        self.n = int(n)
        self.precision = precision

    def apply(self, v):
        v = np.asarray(v)
        if v.shape != (self.n,):
            raise DimensionMismatchError(
                "vector length %r does not match preconditioner dimension %d"
                % (v.shape, self.n)
            )
        if v.dtype != self.precision.dtype:
            raise PrecisionMismatchError(
                "preconditioner works in %s but vector is %s"
                % (self.precision.dtype, v.dtype)
            )
        return self._apply(v)

    def _apply(self, v):
        raise NotImplementedError


class IdentityPreconditioner(PreconditionerHandle):
    kind = "identity"

    def _apply(self, v):
        return v


def identity(n, precision: Precision) -> IdentityPreconditioner:
    return IdentityPreconditioner(n, precision)


@dataclass
class BlockJacobiData:
    """LU factors of the dense diagonal blocks."""

    n: int
    block_size: int
    precision: Precision
    factors: list = field(default_factory=list)  # (lu, piv) per block
    starts: np.ndarray = None

    @property
    def num_blocks(self) -> int:
        return len(self.factors)


def build_block_jacobi(A: CsrMatrix, block_size, precision=None) -> "BlockJacobiPreconditioner":
    """Extract and factorize k-by-k diagonal blocks of A.

    Blocks are dense, missing entries are zero, and the last block is
    smaller when the dimension is not a multiple of k. Factorization is LU
    with partial pivoting in the declared precision; a pivot at or below
    ``k * u * ||block||_inf`` raises SingularBlockError naming the block.
    """
    k = int(block_size)
    if not 1 <= k <= A.n:
        raise DimensionMismatchError("block size must be between 1 and n")
    prec = A.precision if precision is None else precision
    dtype = prec.dtype
    u = prec.unit_roundoff
    starts = np.append(np.arange(0, A.n, k, dtype=np.int64), A.n)
    data = BlockJacobiData(n=A.n, block_size=k, precision=prec, starts=starts)
    for bi in range(starts.shape[0] - 1):
        s, e = int(starts[bi]), int(starts[bi + 1])
        kb = e - s
        block = np.zeros((kb, kb), dtype=dtype)
        for r in range(s, e):
            lo, hi = A.row_ptr[r], A.row_ptr[r + 1]
            cols = A.col_idx[lo:hi]
            a = int(np.searchsorted(cols, s, side="left"))
            b = int(np.searchsorted(cols, e, side="left"))
            block[r - s, cols[a:b] - s] = A.values[lo + a:lo + b].astype(dtype, copy=False)
        threshold = kb * u * float(np.abs(block).sum(axis=1).max())
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            lu, piv = scipy.linalg.lu_factor(block, check_finite=False)
        pivots = np.abs(np.diagonal(lu))
        if float(pivots.min()) <= threshold:
            raise SingularBlockError(bi, pivots.min(), threshold)
        data.factors.append((lu, piv))
    return BlockJacobiPreconditioner(data)


def apply_block_jacobi(data: BlockJacobiData, v):
    """Solve the block-diagonal system for v, block by block."""
    out = np.empty_like(v)
    for bi, (lu, piv) in enumerate(data.factors):
        s, e = int(data.starts[bi]), int(data.starts[bi + 1])
        out[s:e] = scipy.linalg.lu_solve((lu, piv), v[s:e], check_finite=False)
    return out


class BlockJacobiPreconditioner(PreconditionerHandle):
    kind = "jacobi"

    def __init__(self, data: BlockJacobiData):
        super().__init__(data.n, data.precision)
        self.data = data

    def _apply(self, v):
        return apply_block_jacobi(self.data, v)


@dataclass
class GmresPolyData:
    """Roots of the residual polynomial, ready for product-form application.

    ``roots`` are harmonic Ritz values in modified Leja order with complex
    conjugate pairs adjacent (positive imaginary part first). ``degree`` is
    the achieved degree; it is smaller than ``requested_degree`` when the
    seed's Krylov space becomes invariant first, in which case ``truncated``
    is set and the polynomial is exact on that space.
    """

    degree: int
    requested_degree: int
    roots: np.ndarray
    precision: Precision
    truncated: bool


def _harmonic_ritz(hbar: np.ndarray) -> np.ndarray:
    """Harmonic Ritz values of the projected (d+1)-by-d Arnoldi matrix."""
    d = hbar.shape[1]
    H = hbar[:d, :]
    e = np.zeros(d)
    e[-1] = 1.0
    try:
        f = np.linalg.solve(H.T, e)
    except np.linalg.LinAlgError:
        raise PolynomialBreakdownError(
            "projected matrix is singular; cannot form harmonic Ritz values"
        )
    aug = H.copy()
    aug[:, -1] += (hbar[d, d - 1] ** 2) * f
    return np.linalg.eigvals(aug)


def _modified_leja(roots: np.ndarray) -> np.ndarray:
    """Order roots by the modified Leja rule, keeping conjugate pairs adjacent.

    The first point maximizes |theta|; each following point maximizes the
    product of distances to the points already chosen (computed as a sum of
    logs). Whenever a complex root is chosen its conjugate is placed
    immediately after it. Ties resolve to the earliest candidate, so the
    ordering is deterministic.
    """
    remaining = list(np.asarray(roots, dtype=np.complex128))
    ordered = []

    def take(idx):
        theta = remaining.pop(idx)
        if theta.imag != 0:
            if theta.imag < 0:
                theta = np.conj(theta)
            ordered.append(theta)
            want = np.conj(theta)
            partner = min(
                range(len(remaining)), key=lambda t: abs(remaining[t] - want)
            )
            remaining.pop(partner)
            ordered.append(want)
        else:
            ordered.append(theta)

    take(int(np.argmax(np.abs(remaining))))
    while remaining:
        arr = np.asarray(remaining)
        with np.errstate(divide="ignore"):
            score = np.zeros(arr.shape[0])
            for t in ordered:
                score += np.log(np.abs(arr - t))
        take(int(np.argmax(score)))
    return np.asarray(ordered, dtype=np.complex128)


def build_gmres_poly(A: CsrMatrix, degree, seed) -> "PolynomialPreconditioner":
    """Construct a degree-d polynomial approximation to the inverse of A.

    Runs d Arnoldi steps from the seed vector in A's precision, computes
    harmonic Ritz values of the projected matrix in binary64, and stores
    them in modified Leja order. If the Krylov space becomes invariant
    after j < d steps the polynomial is truncated to degree j, where it
    applies the inverse exactly on that space.
    """
    d = int(degree)
    if d < 1:
        raise DimensionMismatchError("polynomial degree must be at least 1")
    seed = np.asarray(seed)
    if seed.shape != (A.n,):
        raise DimensionMismatchError("seed length does not match matrix")
    if seed.dtype != A.values.dtype:
        raise PrecisionMismatchError("seed must be in the matrix precision")
    gamma = norm2(seed)
    if float(gamma) == 0.0:
        raise DimensionMismatchError("seed vector must be nonzero")
    prec = A.precision
    basis = KrylovBasis(A.n, d + 1, prec)
    basis.append(seed / gamma)
    cols = []
    truncated = False
    for j in range(d):
        w = spmv(A, basis.column(j))
        coeffs, beta, appended = cgs2_append(basis, w)
        cols.append((np.asarray(coeffs, dtype=np.float64), float(beta)))
        if not appended:
            truncated = True
            break
    d_eff = len(cols)
    hbar = np.zeros((d_eff + 1, d_eff))
    for i, (coeffs, beta) in enumerate(cols):
        hbar[: i + 1, i] = coeffs
        hbar[i + 1, i] = beta
    roots = _modified_leja(_harmonic_ritz(hbar))
    if np.any(roots == 0):
        raise PolynomialBreakdownError("zero harmonic Ritz value; matrix looks singular")
    data = GmresPolyData(
        degree=d_eff,
        requested_degree=d,
        roots=roots,
        precision=prec,
        truncated=truncated,
    )
    return PolynomialPreconditioner(A, data)


def apply_gmres_poly(data: GmresPolyData, A: CsrMatrix, v):
    """Evaluate p(A) v in product form.

    Real roots contribute one product term each, complex conjugate pairs a
    real quadratic term, so the cost is exactly ``data.degree`` sparse
    matrix-vector products regardless of how many roots are complex.
    """
    if A.precision is not data.precision:
        raise PrecisionMismatchError("matrix precision does not match polynomial")
    if v.dtype != data.precision.dtype:
        raise PrecisionMismatchError("vector precision does not match polynomial")
    roots = data.roots
    acc = np.zeros_like(v)
    work = v.copy()
    i = 0
    while i < data.degree:
        theta = roots[i]
        if theta.imag == 0:
            inv = float(1.0 / theta.real)
            acc += inv * work
            work = work - inv * spmv(A, work)
            i += 1
        else:
            twice_re = float(2.0 * theta.real)
            mod2 = float(theta.real * theta.real + theta.imag * theta.imag)
            t = spmv(A, work)
            acc += (twice_re * work - t) / mod2
            work = work - (twice_re * t - spmv(A, t)) / mod2
            i += 2
    return acc


class PolynomialPreconditioner(PreconditionerHandle):
    kind = "poly"

    def __init__(self, A: CsrMatrix, data: GmresPolyData):
        super().__init__(A.n, data.precision)
        self.matrix = A
        self.data = data

    def _apply(self, v):
        return apply_gmres_poly(self.data, self.matrix, v)


def parse_precond_spec(text):
    """Parse 'none', 'jacobi:K', or 'poly:D' into (kind, parameter)."""
    s = str(text).strip().lower()
    if s in ("none", ""):
        return "none", 0
    if ":" not in s:
        raise ValueError("preconditioner spec %r needs the form kind:parameter" % text)
    kind, _, param = s.partition(":")
    if kind not in ("jacobi", "poly"):
        raise ValueError("unknown preconditioner kind %r" % kind)
    try:
        value = int(param)
    except ValueError:
        raise ValueError("preconditioner parameter %r must be an integer" % param)
    if value < 1:
        raise ValueError("preconditioner parameter must be positive")
    return kind, value
