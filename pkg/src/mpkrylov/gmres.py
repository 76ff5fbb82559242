"""Restarted GMRES with right preconditioning in a single declared precision.

One cycle builds an Arnoldi basis for the preconditioned operator with
twice-iterated classical Gram-Schmidt, maintains the projected least-squares
problem with Givens rotations, and forms the correction from the rotated
triangle. The restarted driver recomputes the true residual at every cycle
boundary and only ever declares convergence from that explicitly computed
residual; the cheap implicit estimate from the rotations decides when a
cycle may stop early.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatchError, PrecisionMismatchError, ZeroRightHandSideError
from .kernels import HessenbergSystem, KrylovBasis, cgs2_append, norm2
from .precision import Precision
from .preconditioners import PreconditionerHandle, identity
from .sparse import CsrMatrix, spmv

__all__ = [
    "SolverConfig",
    "HistoryEntry",
    "CycleState",
    "ConvergenceReport",
    "gmres_cycle",
    "gmres_restarted",
    "detect_loss_of_accuracy",
]


@dataclass(frozen=True)
class SolverConfig:
    """Parameters of a restarted solve.

    ``precond`` is a specification string ('none', 'jacobi:K', 'poly:D')
    describing how a preconditioner should be built by the harness; the
    solver itself receives the built handle. ``precond_precision`` of None
    means the solver precision.
    """

    m: int = 50
    rtol: float = 1e-10
    max_iters: int = 100_000
    max_restarts: int = 1_000_000
    precision: Precision = Precision.binary64
    precond: str = "none"
    precond_precision: Precision | None = None

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("restart length m must be at least 1")
        if not 0.0 < self.rtol < 1.0:
            raise ValueError("rtol must lie strictly between 0 and 1")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")
        if self.max_restarts < 1:
            raise ValueError("max_restarts must be positive")


@dataclass
class HistoryEntry:
    """One row of the convergence log.

    ``implicit_relres`` comes from the rotated projected problem,
    ``explicit_relres`` from an actual residual computation; either may be
    absent when it was not evaluated at that iteration.
    """

    iteration: int
    phase: str
    implicit_relres: float | None
    explicit_relres: float | None


@dataclass
class CycleState:
    """What one GMRES cycle did, for drivers and diagnostics."""

    steps: int
    implicit_relres: list
    norm_scale: float
    breakdown: bool
    basis: np.ndarray | None = None
    hessenberg: np.ndarray | None = None

    @property
    def final_implicit_relres(self) -> float:
        return self.implicit_relres[-1] if self.implicit_relres else 0.0


@dataclass
class ConvergenceReport:
    """Outcome of a full solve."""

    converged: bool
    total_iters: int
    restarts: int
    final_explicit_relres: float
    history: list
    loss_of_accuracy: bool
    x: np.ndarray
    baseline: float
    stalled: bool = False
    phase_iters: dict = field(default_factory=dict)


def _check_system(A, b, x0, M, precision):
    if A.precision is not precision:
        raise PrecisionMismatchError(
            "matrix is %s but solver runs in %s" % (A.precision.value, precision.value)
        )
    for name, v in (("b", b), ("x0", x0)):
        if v.shape != (A.n,):
            raise DimensionMismatchError("%s length does not match matrix" % name)
        if v.dtype != precision.dtype:
            raise PrecisionMismatchError(
                "%s is %s but solver runs in %s" % (name, v.dtype, precision.dtype)
            )
    if M is not None:
        if M.n != A.n:
            raise DimensionMismatchError("preconditioner dimension does not match matrix")
        if M.precision is not precision:
            raise PrecisionMismatchError(
                "preconditioner is %s but solver runs in %s"
                % (M.precision.value, precision.value)
            )


def gmres_cycle(
    A: CsrMatrix,
    M: PreconditionerHandle | None,
    b,
    x0,
    cfg: SolverConfig,
    r0=None,
    norm_scale=None,
    max_steps=None,
    exit_tol=None,
    collect_basis=False,
):
    """Run one right-preconditioned GMRES cycle of at most cfg.m steps.

    The cycle stops early when the implicit relative residual falls to
    ``exit_tol`` (default cfg.rtol) or the new Arnoldi vector's norm drops
    below the breakdown threshold, which means the Krylov space became
    invariant and the projected solution is exact on it.

    Returns ``(x, state)`` with the updated iterate and a CycleState. When
    ``collect_basis`` is set the state carries copies of the basis and the
    unrotated Hessenberg columns for diagnostics.
    """
    prec = cfg.precision
    _check_system(A, b, x0, M, prec)
    if M is None:
        M = identity(A.n, prec)
    if float(norm2(b)) == 0.0:
        raise ZeroRightHandSideError("right-hand side is identically zero")
    r = b - spmv(A, x0) if r0 is None else np.asarray(r0)
    if r.dtype != prec.dtype or r.shape != (A.n,):
        raise PrecisionMismatchError("initial residual has wrong dtype or shape")
    gamma = norm2(r)
    scale = float(gamma) if norm_scale is None else float(norm_scale)
    steps_cap = cfg.m if max_steps is None else max(1, min(cfg.m, int(max_steps)))
    tol = cfg.rtol if exit_tol is None else float(exit_tol)
    if float(gamma) == 0.0:
        state = CycleState(0, [], scale if scale > 0 else 1.0, False)
        return x0.copy(), state
    basis = KrylovBasis(A.n, steps_cap + 1, prec)
    basis.append(r / gamma)
    lsq = HessenbergSystem(steps_cap, gamma, norm_scale=scale, precision=prec)
    raw_cols = [] if collect_basis else None
    implicit = []
    breakdown = False
    k = 0
    while k < steps_cap:
        z = M.apply(basis.column(k))
        w = spmv(A, z)
        coeffs, beta, appended = cgs2_append(basis, w)
        if raw_cols is not None:
            raw_cols.append((np.asarray(coeffs, np.float64), float(beta)))
        rel = lsq.update(k + 1, coeffs, beta)
        implicit.append(rel)
        k += 1
        if not appended:
            breakdown = True
            break
        if rel <= tol:
            break
    d = lsq.solve(k)
    correction = M.apply(basis.columns(k) @ d)
    x = x0 + correction
    state = CycleState(k, implicit, scale, breakdown)
    if collect_basis:
        state.basis = basis.columns(basis.count).copy()
        hbar = np.zeros((k + 1, k))
        for i, (coeffs, beta) in enumerate(raw_cols):
            hbar[: i + 1, i] = coeffs
            hbar[i + 1, i] = beta
        state.hessenberg = hbar
    return x, state


def detect_loss_of_accuracy(cycle_state: CycleState, explicit_relres, rtol) -> bool:
    """True when the projected residual claims convergence the true residual denies.

    The classic symptom: the implicit estimate is at or below the target
    while the explicitly computed relative residual sits more than a factor
    of ten above it.
    """
    return (
        cycle_state.final_implicit_relres <= rtol
        and float(explicit_relres) > 10.0 * rtol
    )


def gmres_restarted(
    A: CsrMatrix,
    M: PreconditionerHandle | None,
    b,
    x0,
    cfg: SolverConfig,
    norm_baseline=None,
    explicit_restart_on_loss=True,
    phase=None,
):
    """Restarted GMRES(m), recomputing the true residual at every restart.

    Convergence is declared only from the explicitly computed relative
    residual against the initial baseline (or ``norm_baseline`` when a
    driver supplies one spanning a larger solve). A cycle whose implicit
    estimate claimed the target while the explicit residual disagrees is a
    loss of accuracy; by default the solve simply restarts from the fresh
    residual, while ``explicit_restart_on_loss=False`` gives up instead.
    """
    prec = cfg.precision
    _check_system(A, b, x0, M, prec)
    if float(norm2(b)) == 0.0:
        raise ZeroRightHandSideError("right-hand side is identically zero")
    if phase is None:
        phase = "double" if prec is Precision.binary64 else "single"
    x = x0.astype(prec.dtype, copy=True)
    r = b - spmv(A, x)
    own_baseline = float(norm2(r))
    scale = own_baseline if norm_baseline is None else float(norm_baseline)
    history = [HistoryEntry(0, phase, None, own_baseline / scale if scale else 0.0)]
    if own_baseline == 0.0:
        return ConvergenceReport(
            converged=True,
            total_iters=0,
            restarts=0,
            final_explicit_relres=0.0,
            history=history,
            loss_of_accuracy=False,
            x=x,
            baseline=scale,
            phase_iters={phase: 0},
        )
    total = 0
    restarts = 0
    loss = False
    converged = False
    explicit = own_baseline / scale
    while True:
        if explicit <= cfg.rtol:
            converged = True
            break
        remaining = cfg.max_iters - total
        if remaining <= 0 or restarts >= cfg.max_restarts:
            break
        x, state = gmres_cycle(
            A,
            M,
            b,
            x,
            cfg,
            r0=r,
            norm_scale=scale,
            max_steps=remaining,
            exit_tol=cfg.rtol,
        )
        for i, rel in enumerate(state.implicit_relres):
            history.append(HistoryEntry(total + i + 1, phase, rel, None))
        total += state.steps
        restarts += 1
        r = b - spmv(A, x)
        explicit = float(norm2(r)) / scale
        if state.steps:
            history[-1] = dataclasses.replace(history[-1], explicit_relres=explicit)
        loss_now = detect_loss_of_accuracy(state, explicit, cfg.rtol)
        loss = loss or loss_now
        if loss_now and not explicit_restart_on_loss:
            break
    return ConvergenceReport(
        converged=converged,
        total_iters=total,
        restarts=restarts,
        final_explicit_relres=explicit,
        history=history,
        loss_of_accuracy=loss,
        x=x,
        baseline=scale,
        phase_iters={phase: total},
    )
