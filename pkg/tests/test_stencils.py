"""Grid preset assembly checked against independently built dense matrices.

The oracles below rebuild each preset entry by entry with plain Python
loops from the documented stencil formulas, keeping them structurally
independent of the vectorized assembly under test.
"""

import numpy as np
import pytest

import mpkrylov as mk


def dense_laplace2d(nx):
    n = nx * nx
    D = np.zeros((n, n))
    for iy in range(nx):
        for ix in range(nx):
            k = ix + nx * iy
            D[k, k] = 4.0
            if ix > 0:
                D[k, k - 1] = -1.0
            if ix < nx - 1:
                D[k, k + 1] = -1.0
            if iy > 0:
                D[k, k - nx] = -1.0
            if iy < nx - 1:
                D[k, k + nx] = -1.0
    return D


def dense_laplace3d(nx):
    n = nx ** 3
    D = np.zeros((n, n))
    for iz in range(nx):
        for iy in range(nx):
            for ix in range(nx):
                k = ix + nx * (iy + nx * iz)
                D[k, k] = 6.0
                for delta, inside in (
                    (-1, ix > 0),
                    (1, ix < nx - 1),
                    (-nx, iy > 0),
                    (nx, iy < nx - 1),
                    (-nx * nx, iz > 0),
                    (nx * nx, iz < nx - 1),
                ):
                    if inside:
                        D[k, k + delta] = -1.0
    return D


def dense_uniflow2d(nx, diffusion, velocity):
    n = nx * nx
    h = 1.0 / (nx + 1)
    vx = vy = velocity / np.sqrt(2.0)
    D = np.zeros((n, n))
    for iy in range(nx):
        for ix in range(nx):
            k = ix + nx * iy
            D[k, k] = 4.0 * diffusion
            if ix > 0:
                D[k, k - 1] = -diffusion - 0.5 * h * vx
            if ix < nx - 1:
                D[k, k + 1] = -diffusion + 0.5 * h * vx
            if iy > 0:
                D[k, k - nx] = -diffusion - 0.5 * h * vy
            if iy < nx - 1:
                D[k, k + nx] = -diffusion + 0.5 * h * vy
    return D


def dense_bentpipe2d(nx, c):
    n = nx * nx
    h = 1.0 / (nx + 1)
    D = np.zeros((n, n))
    for iy in range(nx):
        for ix in range(nx):
            k = ix + nx * iy
            x = (ix + 1) * h
            y = (iy + 1) * h
            vx = c * 2.0 * y * (1.0 - x * x)
            vy = -c * 2.0 * x * (1.0 - y * y)
            D[k, k] = 4.0
            if ix > 0:
                D[k, k - 1] = -1.0 - 0.5 * h * vx
            if ix < nx - 1:
                D[k, k + 1] = -1.0 + 0.5 * h * vx
            if iy > 0:
                D[k, k - nx] = -1.0 - 0.5 * h * vy
            if iy < nx - 1:
                D[k, k + nx] = -1.0 + 0.5 * h * vy
    return D


def dense_stretched2d(nx, s):
    n = nx * nx
    a, b = 1.0 / s, float(s)
    corner, ew, ns, center = -(a + b) / 2.0, b - 2.0 * a, a - 2.0 * b, 4.0 * (a + b)
    D = np.zeros((n, n))
    for iy in range(nx):
        for ix in range(nx):
            k = ix + nx * iy
            for dx in (-1, 0, 1):
                for dy in (-1, 0, 1):
                    jx, jy = ix + dx, iy + dy
                    if not (0 <= jx < nx and 0 <= jy < nx):
                        continue
                    j = jx + nx * jy
                    if dx == 0 and dy == 0:
                        D[k, j] = center
                    elif dx != 0 and dy != 0:
                        D[k, j] = corner
                    elif dx != 0:
                        D[k, j] = ew
                    else:
                        D[k, j] = ns
    return D


@pytest.mark.parametrize("nx", [2, 3, 5])
def test_laplace2d_matches_loop_oracle(nx):
    A = mk.generate_stencil(mk.ProblemSpec("Laplace2D", nx))
    assert np.array_equal(A.to_dense(), dense_laplace2d(nx))


@pytest.mark.parametrize("nx", [2, 3])
def test_laplace3d_matches_loop_oracle(nx):
    A = mk.generate_stencil(mk.ProblemSpec("Laplace3D", nx))
    assert np.array_equal(A.to_dense(), dense_laplace3d(nx))


@pytest.mark.parametrize("nx,diffusion,velocity", [(3, 1.0, 1.0), (4, 2.5, 7.0)])
def test_uniflow2d_matches_loop_oracle(nx, diffusion, velocity):
    spec = mk.ProblemSpec("UniFlow2D", nx, diffusion=diffusion, velocity=velocity)
    A = mk.generate_stencil(spec)
    oracle = dense_uniflow2d(nx, diffusion, velocity)
    assert np.allclose(A.to_dense(), oracle, rtol=0, atol=1e-15)


@pytest.mark.parametrize("nx,c", [(3, 100.0), (5, 7.0)])
def test_bentpipe2d_matches_loop_oracle(nx, c):
    spec = mk.ProblemSpec("BentPipe2D", nx, convection_strength=c)
    A = mk.generate_stencil(spec)
    oracle = dense_bentpipe2d(nx, c)
    assert np.allclose(A.to_dense(), oracle, rtol=0, atol=1e-12)


@pytest.mark.parametrize("nx,s", [(3, 1.0), (4, 50.0)])
def test_stretched2d_matches_loop_oracle(nx, s):
    spec = mk.ProblemSpec("Stretched2D", nx, stretch_factor=s)
    A = mk.generate_stencil(spec)
    assert np.array_equal(A.to_dense(), dense_stretched2d(nx, s))


def test_symmetry_by_preset():
    for preset, symmetric in (
        ("Laplace2D", True),
        ("Laplace3D", True),
        ("Stretched2D", True),
        ("UniFlow2D", False),
        ("BentPipe2D", False),
    ):
        D = mk.generate_stencil(mk.ProblemSpec(preset, 4)).to_dense()
        assert np.array_equal(D, D.T) == symmetric, preset


def test_diffusion_presets_are_positive_definite():
    for preset, kwargs in (
        ("Laplace2D", {}),
        ("Laplace3D", {}),
        ("Stretched2D", {"stretch_factor": 50.0}),
    ):
        D = mk.generate_stencil(mk.ProblemSpec(preset, 4, **kwargs)).to_dense()
        assert np.linalg.eigvalsh(D).min() > 0, preset


def closed_form_nnz(preset, nx):
    if preset == "Laplace3D":
        return 7 * nx ** 3 - 6 * nx ** 2
    if preset == "Stretched2D":
        return (3 * nx - 2) ** 2
    return 5 * nx ** 2 - 4 * nx


def test_entry_counts_match_closed_forms_and_assembly():
    for preset in mk.PRESETS:
        for nx in range(2, 21):
            spec = mk.ProblemSpec(preset, nx)
            n, nnz = mk.stencil_dimensions(spec)
            assert n == spec.n
            assert nnz == closed_form_nnz(preset, nx), (preset, nx)
            A = mk.generate_stencil(spec)
            assert A.n == n
            assert A.nnz == nnz


def test_large_counts_without_assembly():
    # sizes far beyond what a desk machine would assemble densely
    assert mk.stencil_dimensions(mk.ProblemSpec("BentPipe2D", 1500)) == (2250000, 11244000)
    assert mk.stencil_dimensions(mk.ProblemSpec("UniFlow2D", 2500)) == (6250000, 31240000)
    assert mk.stencil_dimensions(mk.ProblemSpec("Laplace3D", 150)) == (3375000, 23490000)
    assert mk.stencil_dimensions(mk.ProblemSpec("Stretched2D", 1500)) == (2250000, 20232004)


def test_boundary_rows_lose_neighbors():
    nx = 4
    A = mk.generate_stencil(mk.ProblemSpec("Laplace2D", nx))
    counts = np.diff(A.row_ptr)
    # corner rows keep 3 entries, edges 4, interior 5
    assert counts[0] == 3 and counts[nx - 1] == 3
    assert counts[1] == 4
    assert counts[nx + 1] == 5


def test_interior_row_sums_vanish_for_laplacians():
    for preset in ("Laplace2D", "Stretched2D"):
        nx = 5
        A = mk.generate_stencil(mk.ProblemSpec(preset, nx))
        sums = A.to_dense().sum(axis=1)
        interior = nx + np.arange(1, nx - 1)  # interior nodes of the second grid row
        assert np.abs(sums[interior]).max() <= 1e-12
        assert sums.min() >= -1e-12  # boundary rows only add mass


def test_spec_validation():
    with pytest.raises(ValueError):
        mk.ProblemSpec("Helmholtz2D", 4)
    with pytest.raises(ValueError):
        mk.ProblemSpec("Laplace2D", 1)
    with pytest.raises(ValueError):
        mk.ProblemSpec("UniFlow2D", 4, diffusion=0.0)
    with pytest.raises(ValueError):
        mk.ProblemSpec("Stretched2D", 4, stretch_factor=-2.0)


def test_generated_values_are_binary64():
    A = mk.generate_stencil(mk.ProblemSpec("BentPipe2D", 3))
    assert A.values.dtype == np.float64
    assert A.precision is mk.Precision.binary64
