"""Mixed-precision restarted GMRES on sparse matrices.

The package provides a small CSR container with explicit storage
precisions, regular-grid test problems, restarted GMRES with twice-iterated
classical Gram-Schmidt, two ways of combining single and double precision
(iterative refinement and an iteration-count switch), block Jacobi and
GMRES-polynomial right preconditioners, Matrix Market I/O, and a
bandwidth-reducing reordering.
"""

from .errors import (
    ColumnOrderError,
    DimensionMismatchError,
    EntryOutOfRangeError,
    InvalidPermutationError,
    MatrixMarketError,
    MpkError,
    PolynomialBreakdownError,
    PrecisionMismatchError,
    SingularBlockError,
    TriangularBreakdownError,
    ZeroRightHandSideError,
)
from .gmres import (
    ConvergenceReport,
    CycleState,
    HistoryEntry,
    SolverConfig,
    detect_loss_of_accuracy,
    gmres_cycle,
    gmres_restarted,
)
from .kernels import HessenbergSystem, KrylovBasis, axpy, cgs2_append, dot, norm2, scale
from .mmio import read_matrix_market, read_matrix_market_header, write_matrix_market
from .model import SpmvModelInput, SpmvSpeedupModel, spmv_speedup_model
from .multiprecision import (
    CastApplyPreconditioner,
    FdConfig,
    IrConfig,
    gmres_fd,
    gmres_ir,
    wrap_low_precision_preconditioner,
)
from .precision import Precision
from .preconditioners import (
    BlockJacobiData,
    BlockJacobiPreconditioner,
    GmresPolyData,
    IdentityPreconditioner,
    PolynomialPreconditioner,
    PreconditionerHandle,
    apply_block_jacobi,
    apply_gmres_poly,
    build_block_jacobi,
    build_gmres_poly,
    identity,
    parse_precond_spec,
)
from .reorder import bandwidth, rcm_ordering
from .sparse import (
    CsrMatrix,
    convert_matrix,
    convert_vector,
    csr_from_coo,
    csr_from_triplets,
    invert_permutation,
    permute_system,
    spmv,
)
from .stencils import PRESETS, ProblemSpec, generate_stencil, stencil_dimensions

__version__ = "0.1.0"
