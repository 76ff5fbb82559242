"""Finite-difference and finite-element test problems on regular grids.

Every preset discretizes a PDE on the interior of the unit square or cube
with homogeneous Dirichlet boundaries. Grid points are the nx**d interior
nodes x_i = i * h with h = 1 / (nx + 1), numbered x-fastest, so node
(ix, iy) maps to index ix + nx * iy (and z slowest in 3D).

Stencil entries are always emitted structurally, even when a coefficient
evaluates to zero, so entry counts depend only on the preset and nx.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sparse import CsrMatrix

__all__ = ["PRESETS", "ProblemSpec", "generate_stencil", "stencil_dimensions"]

PRESETS = ("Laplace2D", "Laplace3D", "UniFlow2D", "BentPipe2D", "Stretched2D")


@dataclass(frozen=True)
class ProblemSpec:
    """A preset problem name plus its grid size and physics parameters.

    Parameters
    ----------
    preset : str
        One of PRESETS.
    nx : int
        Interior grid points per axis, at least 2.
    diffusion : float
        Diffusion coefficient for UniFlow2D.
    velocity : float
        Convection speed for UniFlow2D; the flow direction is the diagonal
        (1, 1) normalized to unit length.
    convection_strength : float
        Multiplier on the recirculating velocity field of BentPipe2D.
    stretch_factor : float
        Cell aspect ratio hx / hy for Stretched2D.
    """

    preset: str
    nx: int
    diffusion: float = 1.0
    velocity: float = 1.0
    convection_strength: float = 100.0
    stretch_factor: float = 50.0

    def __post_init__(self):
        if self.preset not in PRESETS:
            raise ValueError(
                "unknown preset %r (choose from %s)" % (self.preset, ", ".join(PRESETS))
            )
        if int(self.nx) != self.nx or self.nx < 2:
            raise ValueError("nx must be an integer >= 2")
        if self.preset == "UniFlow2D" and self.diffusion <= 0:
            raise ValueError("diffusion must be positive")
        if self.preset == "Stretched2D" and self.stretch_factor <= 0:
            raise ValueError("stretch_factor must be positive")

    @property
    def n(self) -> int:
        """Total number of unknowns."""
        if self.preset == "Laplace3D":
            return self.nx ** 3
        return self.nx ** 2


def _grid2d(nx):
    idx = np.arange(nx * nx, dtype=np.int64)
    return idx, idx % nx, idx // nx


def _five_point(spec: ProblemSpec, want_values: bool):
    """Shared 5-point layout: south, west, center, east, north."""
    nx = spec.nx
    idx, ix, iy = _grid2d(nx)
    disp = np.array([-nx, -1, 0, 1, nx], dtype=np.int64)
    masks = np.column_stack((iy > 0, ix > 0, np.ones(idx.shape[0], bool), ix < nx - 1, iy < nx - 1))
    if not want_values:
        return idx, disp, masks, None

    h = 1.0 / (nx + 1)
    if spec.preset == "Laplace2D":
        coeffs = np.array([-1.0, -1.0, 4.0, -1.0, -1.0])
        vals = np.broadcast_to(coeffs, (idx.shape[0], 5))
    elif spec.preset == "UniFlow2D":
        d = spec.diffusion
        vx = vy = spec.velocity / np.sqrt(2.0)
        coeffs = np.array(
            [
                -d - 0.5 * h * vy,  # south
                -d - 0.5 * h * vx,  # west
                4.0 * d,
                -d + 0.5 * h * vx,  # east
                -d + 0.5 * h * vy,  # north
            ]
        )
        vals = np.broadcast_to(coeffs, (idx.shape[0], 5))
    else:  # BentPipe2D: recirculating flow v = c * (2y(1 - x^2), -2x(1 - y^2))
        c = spec.convection_strength
        x = (ix + 1) * h
        y = (iy + 1) * h
        vx = c * 2.0 * y * (1.0 - x * x)
        vy = -c * 2.0 * x * (1.0 - y * y)
        vals = np.empty((idx.shape[0], 5))
        vals[:, 0] = -1.0 - 0.5 * h * vy
        vals[:, 1] = -1.0 - 0.5 * h * vx
        vals[:, 2] = 4.0
        vals[:, 3] = -1.0 + 0.5 * h * vx
        vals[:, 4] = -1.0 + 0.5 * h * vy
    return idx, disp, masks, vals


def _seven_point(spec: ProblemSpec, want_values: bool):
    nx = spec.nx
    n = nx ** 3
    idx = np.arange(n, dtype=np.int64)
    ix = idx % nx
    iy = (idx // nx) % nx
    iz = idx // (nx * nx)
    disp = np.array([-nx * nx, -nx, -1, 0, 1, nx, nx * nx], dtype=np.int64)
    masks = np.column_stack(
        (iz > 0, iy > 0, ix > 0, np.ones(n, bool), ix < nx - 1, iy < nx - 1, iz < nx - 1)
    )
    vals = None
    if want_values:
        coeffs = np.array([-1.0, -1.0, -1.0, 6.0, -1.0, -1.0, -1.0])
        vals = np.broadcast_to(coeffs, (n, 7))
    return idx, disp, masks, vals


def _nine_point(spec: ProblemSpec, want_values: bool):
    """Bilinear finite elements for the Laplacian on cells stretched in x.

    With aspect ratio s = hx / hy the assembled interior stencil is, up to
    a positive factor,

        corners: -(a + b) / 2,  east/west: b - 2a,  north/south: a - 2b,
        center:  4 (a + b),     where a = 1 / s and b = s.

    At s = 1 this is the familiar 8/3, -1/3 pattern. The matrix is symmetric
    positive definite for any s > 0 and its conditioning grows with s.
    """
    nx = spec.nx
    idx, ix, iy = _grid2d(nx)
    disp = np.array(
        [-nx - 1, -nx, -nx + 1, -1, 0, 1, nx - 1, nx, nx + 1], dtype=np.int64
    )
    w = ix > 0
    e = ix < nx - 1
    s_ = iy > 0
    n_ = iy < nx - 1
    masks = np.column_stack(
        (w & s_, s_, e & s_, w, np.ones(idx.shape[0], bool), e, w & n_, n_, e & n_)
    )
    vals = None
    if want_values:
        a = 1.0 / spec.stretch_factor
        b = float(spec.stretch_factor)
        corner = -(a + b) / 2.0
        ew = b - 2.0 * a
        ns = a - 2.0 * b
        coeffs = np.array([corner, ns, corner, ew, 4.0 * (a + b), ew, corner, ns, corner])
        vals = np.broadcast_to(coeffs, (idx.shape[0], 9))
    return idx, disp, masks, vals


_BUILDERS = {
    "Laplace2D": _five_point,
    "UniFlow2D": _five_point,
    "BentPipe2D": _five_point,
    "Laplace3D": _seven_point,
    "Stretched2D": _nine_point,
}


def stencil_dimensions(spec: ProblemSpec):
    """Count unknowns and stored entries without materializing the matrix.

    Runs the same neighbor-validity logic as generate_stencil and sums the
    masks, so the pair (n, nnz) always matches the generated matrix.
    """
    _, _, masks, _ = _BUILDERS[spec.preset](spec, want_values=False)
    return spec.n, int(masks.sum())


def generate_stencil(spec: ProblemSpec) -> CsrMatrix:
    """Assemble the preset's matrix in binary64.

    Within each row the candidate columns are already in increasing
    displacement order, so the CSR arrays come straight from compressing
    the validity masks; no sorting pass is needed.
    """
    idx, disp, masks, vals = _BUILDERS[spec.preset](spec, want_values=True)
    n = spec.n
    cols = idx[:, None] + disp[None, :]
    flat = masks.ravel()
    col_idx = cols.ravel()[flat]
    values = np.ascontiguousarray(vals.ravel()[flat], dtype=np.float64)
    row_ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(masks.sum(axis=1), out=row_ptr[1:])
    return CsrMatrix(n, row_ptr, col_idx, values)
