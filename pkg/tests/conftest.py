"""Shared fixtures and small matrix factories for the test suite."""

import numpy as np
import pytest

import mpkrylov as mk


@pytest.fixture
def rng():
    """Deterministic generator so property loops are reproducible."""
    return np.random.default_rng(20240817)


def random_csr(rng, n, density=0.3, dtype=np.float64, diag_shift=None):
    """Random sparse matrix with a guaranteed nonzero diagonal.

    The diagonal shift (default n) makes the matrix comfortably
    nonsingular and diagonally dominant, which keeps oracle solves and
    factorization-based preconditioners well behaved.
    """
    if diag_shift is None:
        diag_shift = float(n)
    mask = rng.random((n, n)) < density
    np.fill_diagonal(mask, True)
    dense = np.where(mask, rng.standard_normal((n, n)), 0.0)
    dense[np.arange(n), np.arange(n)] += diag_shift
    dense = dense.astype(dtype)
    rows, cols = np.nonzero(dense)
    return mk.csr_from_coo(rows, cols, dense[rows, cols], n, dtype=dtype), dense


def laplace(nx, preset="Laplace2D", **kwargs):
    """Convenience builder for the grid presets."""
    return mk.generate_stencil(mk.ProblemSpec(preset, nx, **kwargs))
