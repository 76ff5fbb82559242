"""Bandwidth-reducing reordering of sparse matrices."""

from __future__ import annotations

import numpy as np

from .sparse import CsrMatrix, csr_from_coo

__all__ = ["rcm_ordering", "bandwidth"]


def _symmetric_adjacency(A: CsrMatrix):
    """Pattern of A + A^T with the diagonal removed, as (indptr, indices)."""
    rows = np.repeat(np.arange(A.n, dtype=np.int64), np.diff(A.row_ptr))
    off = rows != A.col_idx
    r = np.concatenate([rows[off], A.col_idx[off]])
    c = np.concatenate([A.col_idx[off], rows[off]])
    pattern = csr_from_coo(r, c, np.ones(r.shape[0], dtype=np.float64), A.n)
    return pattern.row_ptr, pattern.col_idx


def rcm_ordering(A: CsrMatrix) -> np.ndarray:
    """Reverse Cuthill-McKee ordering of the symmetrized sparsity pattern.

    Each connected component is traversed breadth first from a vertex of
    minimum degree (lowest index on ties), neighbors visited in order of
    increasing degree then index, and the component's ordering is reversed.
    Components are emitted in the order they are discovered, so a matrix
    with no off-diagonal entries yields the identity permutation.

    Returns the permutation ``perm`` meant for ``permute_system``: row i of
    the reordered matrix is row perm[i] of the input.
    """
    n = A.n
    indptr, indices = _symmetric_adjacency(A)
    deg = np.diff(indptr)
    # Global vertex sweep order: by degree, index breaking ties.
    sweep = np.lexsort((np.arange(n, dtype=np.int64), deg))
    visited = np.zeros(n, dtype=bool)
    perm = np.empty(n, dtype=np.int64)
    pos = 0
    sweep_at = 0
    while pos < n:
        while visited[sweep[sweep_at]]:
            sweep_at += 1
        root = sweep[sweep_at]
        comp_start = pos
        visited[root] = True
        perm[pos] = root
        pos += 1
        head = comp_start
        while head < pos:
            u = perm[head]
            head += 1
            nbrs = indices[indptr[u]:indptr[u + 1]]
            nbrs = nbrs[~visited[nbrs]]
            if nbrs.shape[0]:
                nbrs = nbrs[np.lexsort((nbrs, deg[nbrs]))]
                visited[nbrs] = True
                perm[pos:pos + nbrs.shape[0]] = nbrs
                pos += nbrs.shape[0]
        perm[comp_start:pos] = perm[comp_start:pos][::-1]
    return perm


def bandwidth(A: CsrMatrix) -> int:
    """Largest |i - j| over stored entries of the symmetrized pattern."""
    if A.nnz == 0:
        return 0
    rows = np.repeat(np.arange(A.n, dtype=np.int64), np.diff(A.row_ptr))
    return int(np.abs(rows - A.col_idx).max())
