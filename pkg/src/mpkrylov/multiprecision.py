"""Drivers that combine working precisions around the single-precision core.

Two strategies are provided. Iterative refinement wraps every low-precision
cycle in a high-precision residual correction, so each group of m inner
iterations is followed by one outer update and the true residual can keep
falling past where the low precision alone would stagnate. The switch
driver instead runs plain restarted cycles in low precision for a fixed
iteration budget, promotes the iterate, and continues in high precision.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatchError,
    PrecisionMismatchError,
    ZeroRightHandSideError,
)
from .gmres import (
    ConvergenceReport,
    HistoryEntry,
    SolverConfig,
    gmres_cycle,
    gmres_restarted,
)
from .kernels import norm2
from .precision import Precision
from .preconditioners import PreconditionerHandle
from .sparse import CsrMatrix, convert_matrix, convert_vector, spmv

__all__ = [
    "IrConfig",
    "FdConfig",
    "gmres_ir",
    "gmres_fd",
    "CastApplyPreconditioner",
    "wrap_low_precision_preconditioner",
]


@dataclass(frozen=True)
class IrConfig:
    """Iterative-refinement parameters.

    ``inner`` fixes the restart length, precision, and total inner
    iteration budget of the low-precision cycles; convergence is judged
    only by the outer residual against ``rtol``.
    """

    inner: SolverConfig
    outer_precision: Precision = Precision.binary64
    rtol: float = 1e-10
    max_refinements: int = 1_000_000

    def __post_init__(self):
        if self.inner.precision.bits >= self.outer_precision.bits:
            raise ValueError("inner precision must be strictly lower than outer")
        if not 0.0 < self.rtol < 1.0:
            raise ValueError("rtol must lie strictly between 0 and 1")
        if self.max_refinements < 1:
            raise ValueError("max_refinements must be positive")


@dataclass(frozen=True)
class FdConfig:
    """Precision-switch parameters.

    The low phase runs restarted cycles for exactly ``switch_iter``
    iterations (a multiple of the low restart length), then the iterate is
    promoted and the high phase continues against the original residual
    baseline. ``switch_iter`` of zero skips the low phase entirely, making
    the run identical to a pure high-precision solve.
    """

    switch_iter: int
    low: SolverConfig
    high: SolverConfig

    def __post_init__(self):
        if self.switch_iter < 0:
            raise ValueError("switch_iter must be nonnegative")
        if self.low.precision.bits >= self.high.precision.bits:
            raise ValueError("low precision must be strictly lower than high")
        if self.switch_iter % self.low.m != 0:
            raise ValueError(
                "switch_iter %d is not a multiple of the restart length %d"
                % (self.switch_iter, self.low.m)
            )
        if self.low.rtol != self.high.rtol:
            raise ValueError("low and high phases must share one tolerance")


def _check_outer(A, b, x0, precision):
    if A.precision is not precision:
        raise PrecisionMismatchError(
            "matrix is %s but the outer loop runs in %s"
            % (A.precision.value, precision.value)
        )
    for name, v in (("b", b), ("x0", x0)):
        if v.shape != (A.n,):
            raise DimensionMismatchError("%s length does not match matrix" % name)
        if v.dtype != precision.dtype:
            raise PrecisionMismatchError("%s must be stored in %s" % (name, precision.value))


def _low_matrix(A, A_low, target):
    if A_low is None:
        return convert_matrix(A, target)
    if A_low.precision is not target:
        raise PrecisionMismatchError("supplied low-precision matrix has wrong precision")
    if A_low.n != A.n:
        raise DimensionMismatchError("supplied low-precision matrix has wrong dimension")
    return A_low


def gmres_ir(
    A: CsrMatrix,
    b,
    x0,
    cfg: IrConfig,
    M: PreconditionerHandle | None = None,
    A_low: CsrMatrix | None = None,
):
    """GMRES-based iterative refinement.

    Each refinement casts the current high-precision residual down, runs
    exactly one low-precision GMRES cycle from a zero initial guess with no
    tolerance test of its own (only an invariant-subspace breakdown or an
    implicit residual at the low precision's noise floor, ten times its
    unit roundoff, ends a cycle early), promotes the correction, and
    recomputes the true residual. Passing ``A_low`` skips the internal
    down-conversion of the matrix, letting harnesses keep setup out of
    timed regions.
    """
    prec = cfg.outer_precision
    low = cfg.inner.precision
    _check_outer(A, b, x0, prec)
    if M is not None and M.precision is not low:
        raise PrecisionMismatchError("preconditioner must live in the inner precision")
    if float(norm2(b)) == 0.0:
        raise ZeroRightHandSideError("right-hand side is identically zero")
    Alow = _low_matrix(A, A_low, low)
    x = x0.astype(prec.dtype, copy=True)
    r = b - spmv(A, x)
    baseline = float(norm2(r))
    history = [HistoryEntry(0, "outer", None, 1.0 if baseline else 0.0)]
    if baseline == 0.0:
        return ConvergenceReport(
            converged=True,
            total_iters=0,
            restarts=0,
            final_explicit_relres=0.0,
            history=history,
            loss_of_accuracy=False,
            x=x,
            baseline=baseline,
            phase_iters={"inner": 0, "outer": 0},
        )
    floor = 10.0 * low.unit_roundoff
    zeros_low = np.zeros(A.n, dtype=low.dtype)
    explicit = 1.0
    total = 0
    refinements = 0
    zero_streak = 0
    stalled = False
    converged = False
    while True:
        if explicit <= cfg.rtol:
            converged = True
            break
        if refinements >= cfg.max_refinements:
            break
        remaining = cfg.inner.max_iters - total
        if remaining <= 0:
            break
        r_low = convert_vector(r, low)
        r_low_norm = float(norm2(r_low))
        if r_low_norm == 0.0:
            # The residual is invisible at the low precision: no correction
            # is possible, which is a stall once it repeats.
            refinements += 1
            zero_streak += 1
            if zero_streak >= 2:
                stalled = True
                break
            continue
        u_low, state = gmres_cycle(
            Alow,
            M,
            r_low,
            zeros_low,
            cfg.inner,
            r0=r_low,
            max_steps=remaining,
            exit_tol=floor,
        )
        for i, rel in enumerate(state.implicit_relres):
            history.append(
                HistoryEntry(total + i + 1, "inner", rel * r_low_norm / baseline, None)
            )
        total += state.steps
        refinements += 1
        correction = convert_vector(u_low, prec)
        x_next = x + correction
        # A correction too small to move the iterate is a zero correction;
        # two in a row mean further refinements cannot make progress.
        if np.array_equal(x_next, x):
            zero_streak += 1
        else:
            zero_streak = 0
        x = x_next
        r = b - spmv(A, x)
        explicit = float(norm2(r)) / baseline
        history.append(HistoryEntry(total, "outer", None, explicit))
        if zero_streak >= 2:
            stalled = True
            break
    return ConvergenceReport(
        converged=converged,
        total_iters=total,
        restarts=refinements,
        final_explicit_relres=explicit,
        history=history,
        loss_of_accuracy=False,
        x=x,
        baseline=baseline,
        stalled=stalled,
        phase_iters={"inner": total, "outer": refinements},
    )


def gmres_fd(
    A: CsrMatrix,
    b,
    x0,
    cfg: FdConfig,
    M_low: PreconditionerHandle | None = None,
    M_high: PreconditionerHandle | None = None,
    A_low: CsrMatrix | None = None,
):
    """Run restarted GMRES in low precision first, then finish in high.

    With ``switch_iter`` of zero the low phase is skipped outright and the
    call reduces to the plain high-precision solver on the very same code
    path, so results match a pure high-precision run exactly. Otherwise the
    low phase runs for switch_iter iterations (fewer if it converges or
    breaks down), its iterate is promoted, and the high phase measures
    progress against the original high-precision residual norm.
    """
    hi = cfg.high.precision
    lo = cfg.low.precision
    _check_outer(A, b, x0, hi)
    if cfg.switch_iter == 0:
        report = gmres_restarted(A, M_high, b, x0, cfg.high)
        report.phase_iters = {"single": 0, "double": report.total_iters}
        return report
    if float(norm2(b)) == 0.0:
        raise ZeroRightHandSideError("right-hand side is identically zero")
    baseline = float(norm2(b - spmv(A, x0)))
    Alow = _low_matrix(A, A_low, lo)
    b_low = convert_vector(b, lo)
    x0_low = convert_vector(x0, lo)
    low_cfg = dataclasses.replace(cfg.low, max_iters=cfg.switch_iter)
    report_low = gmres_restarted(Alow, M_low, b_low, x0_low, low_cfg, phase="single")
    switched = convert_vector(report_low.x, hi)
    report_high = gmres_restarted(
        A, M_high, b, switched, cfg.high, norm_baseline=baseline, phase="double"
    )
    offset = report_low.total_iters
    history = list(report_low.history)
    history.extend(
        dataclasses.replace(e, iteration=e.iteration + offset) for e in report_high.history
    )
    return ConvergenceReport(
        converged=report_high.converged,
        total_iters=offset + report_high.total_iters,
        restarts=report_low.restarts + report_high.restarts,
        final_explicit_relres=report_high.final_explicit_relres,
        history=history,
        loss_of_accuracy=report_low.loss_of_accuracy or report_high.loss_of_accuracy,
        x=report_high.x,
        baseline=baseline,
        phase_iters={"single": offset, "double": report_high.total_iters},
    )


class CastApplyPreconditioner(PreconditionerHandle):
    """Applies a lower-precision preconditioner inside a higher-precision solve.

    apply() is exactly: cast the vector down, apply the wrapped handle,
    cast the result back up. Fresh buffers are allocated on every call and
    no scaling of any kind is introduced.
    """

    kind = "cast"

    def __init__(self, inner: PreconditionerHandle, work: Precision):
        super().__init__(inner.n, work)
        self.inner = inner
        self.kind = "cast[%s]" % inner.kind

    def _apply(self, v):
        low = v.astype(self.inner.precision.dtype)
        return self.inner.apply(low).astype(self.precision.dtype)


def wrap_low_precision_preconditioner(
    M: PreconditionerHandle, work: Precision = Precision.binary64
) -> CastApplyPreconditioner:
    """Wrap a low-precision handle for use by a solver running in ``work``."""
    if M.precision.bits >= work.bits:
        raise PrecisionMismatchError(
            "wrapped preconditioner must be in a strictly lower precision than %s"
            % work.value
        )
    return CastApplyPreconditioner(M, work)
