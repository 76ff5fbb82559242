"""Command-line harness for generating problems and running solver experiments.

Subcommands
-----------
generate      write a preset matrix to a Matrix Market file
solve         run one solver configuration, logging history and a summary
sweep-switch  total iterations of the precision-switch driver per switch point
sweep-restart restart-length sweep comparing plain double against refinement
model-spmv    evaluate the memory-traffic speedup model

Exit codes: 0 when the solve converged (or the command has no convergence
notion), 2 when it ran but did not converge, 1 for usage or data errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import time
from dataclasses import dataclass

import numpy as np

from .errors import MpkError
from .gmres import SolverConfig, gmres_restarted
from .mmio import read_matrix_market, write_matrix_market
from .model import SpmvModelInput, spmv_speedup_model
from .multiprecision import (
    FdConfig,
    IrConfig,
    gmres_fd,
    gmres_ir,
    wrap_low_precision_preconditioner,
)
from .precision import Precision
from .preconditioners import build_block_jacobi, build_gmres_poly, parse_precond_spec
from .reorder import rcm_ordering
from .sparse import convert_matrix, convert_vector, permute_system
from .stencils import PRESETS, ProblemSpec, generate_stencil, stencil_dimensions

__all__ = ["ExperimentSpec", "run_experiment", "main", "entry"]

DEFAULT_SEED = 12345

SOLVERS = ("gmres", "gmres-ir", "gmres-fd")


class CliError(Exception):
    """A problem with flags or input data; maps to exit code 1."""


@dataclass
class ExperimentSpec:
    """Everything one solver run needs, validated before any allocation."""

    preset: str | None = None
    nx: int = 32
    diffusion: float = 1.0
    velocity: float = 1.0
    convection_strength: float = 100.0
    stretch_factor: float = 50.0
    matrix_path: str | None = None
    solver: str = "gmres"
    precision: str = "double"
    m: int = 50
    rtol: float = 1e-10
    max_iters: int = 100_000
    precond: str = "none"
    precond_precision: str | None = None
    switch_iter: int | None = None
    use_rcm: bool = False
    rhs: str = "ones"
    seed: int = DEFAULT_SEED
    repeat: int = 1

    def validate(self):
        if (self.preset is None) == (self.matrix_path is None):
            raise CliError("give exactly one of --preset or --matrix")
        if self.preset is not None and self.preset not in PRESETS:
            raise CliError("unknown preset %r" % self.preset)
        if self.solver not in SOLVERS:
            raise CliError("unknown solver %r" % self.solver)
        try:
            prec = Precision.parse(self.precision)
        except ValueError as exc:
            raise CliError(str(exc))
        try:
            pkind, _ = parse_precond_spec(self.precond)
        except ValueError as exc:
            raise CliError(str(exc))
        pprec = None
        if self.precond_precision is not None:
            try:
                pprec = Precision.parse(self.precond_precision)
            except ValueError as exc:
                raise CliError(str(exc))
        if self.solver == "gmres-ir":
            if prec is not Precision.binary64:
                raise CliError("gmres-ir refines in double precision; drop --precision single")
            if pprec is Precision.binary64:
                raise CliError("gmres-ir applies its preconditioner in single precision")
        if self.solver == "gmres-fd":
            if self.switch_iter is None:
                raise CliError("gmres-fd needs --switch-iter")
            if self.switch_iter < 0:
                raise CliError("--switch-iter must be nonnegative")
            if self.switch_iter % self.m != 0:
                raise CliError("--switch-iter must be a multiple of the restart length")
            if prec is not Precision.binary64:
                raise CliError("gmres-fd finishes in double precision; drop --precision single")
        if self.solver == "gmres" and pprec is not None and pkind != "none":
            if pprec.bits > prec.bits:
                raise CliError(
                    "a preconditioner cannot run in higher precision than its solver"
                )
        if self.rhs not in ("ones", "random"):
            raise CliError("--rhs must be 'ones' or 'random'")
        if self.m < 1 or self.max_iters < 1 or self.repeat < 1:
            raise CliError("sizes and budgets must be positive")
        if not 0.0 < self.rtol < 1.0:
            raise CliError("--tol must lie strictly between 0 and 1")

    def problem(self) -> ProblemSpec:
        return ProblemSpec(
            preset=self.preset,
            nx=self.nx,
            diffusion=self.diffusion,
            velocity=self.velocity,
            convection_strength=self.convection_strength,
            stretch_factor=self.stretch_factor,
        )


def _load_system(spec: ExperimentSpec):
    """Build or read the binary64 system (A, b) after optional reordering."""
    if spec.preset is not None:
        A = generate_stencil(spec.problem())
    else:
        A = read_matrix_market(spec.matrix_path)
    if spec.rhs == "ones":
        b = np.ones(A.n, dtype=np.float64)
    else:
        rng = np.random.default_rng(spec.seed)
        b = rng.standard_normal(A.n)
    if spec.use_rcm:
        perm = rcm_ordering(A)
        A, b = permute_system(A, b, perm)
    return A, b


def _build_precond(kind, param, A64, b64, precision):
    """Build one preconditioner handle in the requested precision."""
    A = convert_matrix(A64, precision)
    if kind == "jacobi":
        return build_block_jacobi(A, param, precision)
    seed = convert_vector(b64, precision)
    return build_gmres_poly(A, param, seed)


def run_experiment(spec: ExperimentSpec):
    """Run one experiment; returns (report, summary dict).

    Matrix down-conversions and preconditioner setup happen outside the
    timed region, so ``wall_seconds`` covers the solver loop alone. With
    ``repeat`` greater than one the run whose time is the median is
    reported.
    """
    spec.validate()
    A, b = _load_system(spec)
    prec = Precision.parse(spec.precision)
    pkind, pparam = parse_precond_spec(spec.precond)
    pprec = (
        Precision.parse(spec.precond_precision)
        if spec.precond_precision is not None
        else None
    )
    x0 = np.zeros(A.n, dtype=np.float64)

    if spec.solver == "gmres":
        A_s = convert_matrix(A, prec)
        b_s = convert_vector(b, prec)
        x0_s = convert_vector(x0, prec)
        M = None
        if pkind != "none":
            build_prec = prec if pprec is None else pprec
            M = _build_precond(pkind, pparam, A, b, build_prec)
            if build_prec.bits < prec.bits:
                M = wrap_low_precision_preconditioner(M, prec)
        cfg = SolverConfig(
            m=spec.m,
            rtol=spec.rtol,
            max_iters=spec.max_iters,
            precision=prec,
            precond=spec.precond,
            precond_precision=pprec,
        )
        solve = lambda: gmres_restarted(A_s, M, b_s, x0_s, cfg)
    elif spec.solver == "gmres-ir":
        inner = SolverConfig(
            m=spec.m, rtol=spec.rtol, max_iters=spec.max_iters, precision=Precision.binary32
        )
        cfg = IrConfig(inner=inner, rtol=spec.rtol)
        A_low = convert_matrix(A, Precision.binary32)
        M = None
        if pkind != "none":
            M = _build_precond(pkind, pparam, A, b, Precision.binary32)
        solve = lambda: gmres_ir(A, b, x0, cfg, M=M, A_low=A_low)
    else:
        low = SolverConfig(
            m=spec.m, rtol=spec.rtol, max_iters=spec.max_iters, precision=Precision.binary32
        )
        high = SolverConfig(
            m=spec.m, rtol=spec.rtol, max_iters=spec.max_iters, precision=Precision.binary64
        )
        cfg = FdConfig(switch_iter=spec.switch_iter, low=low, high=high)
        A_low = convert_matrix(A, Precision.binary32)
        M_low = M_high = None
        if pkind != "none":
            M_low = _build_precond(pkind, pparam, A, b, Precision.binary32)
            M_high = _build_precond(pkind, pparam, A, b, Precision.binary64)
        solve = lambda: gmres_fd(A, b, x0, cfg, M_low=M_low, M_high=M_high, A_low=A_low)

    runs = []
    for _ in range(spec.repeat):
        start = time.perf_counter()
        report = solve()
        runs.append((time.perf_counter() - start, report))
    runs.sort(key=lambda pair: pair[0])
    wall, report = runs[len(runs) // 2]

    summary = {
        "solver": spec.solver,
        "precision": prec.short_name(),
        "n": A.n,
        "nnz": A.nnz,
        "m": spec.m,
        "rtol": spec.rtol,
        "converged": bool(report.converged),
        "total_iters": int(report.total_iters),
        "restarts": int(report.restarts),
        "final_relres": float(report.final_explicit_relres),
        "loss_of_accuracy": bool(report.loss_of_accuracy),
        "wall_seconds": wall,
    }
    return report, summary


def _fmt_res(value):
    return "" if value is None else format(value, ".10e")


def write_history_csv(path, history):
    """History rows as iter,phase,implicit_relres,explicit_relres."""
    with open(path, "w", encoding="ascii") as f:
        f.write("iter,phase,implicit_relres,explicit_relres\n")
        for e in history:
            f.write(
                "%d,%s,%s,%s\n"
                % (e.iteration, e.phase, _fmt_res(e.implicit_relres), _fmt_res(e.explicit_relres))
            )


def write_summary_json(path, summary):
    with open(path, "w", encoding="ascii") as f:
        json.dump(summary, f, indent=2)
        f.write("\n")


def _spec_from_args(args) -> ExperimentSpec:
    seed = args.__dict__.get("seed")
    if seed is None:
        try:
            seed = int(os.environ.get("MPK_SEED", DEFAULT_SEED))
        except ValueError:
            raise CliError("MPK_SEED must be an integer")
    return ExperimentSpec(
        preset=args.preset,
        nx=args.nx,
        diffusion=args.diffusion,
        velocity=args.velocity,
        convection_strength=args.convection_strength,
        stretch_factor=args.stretch_factor,
        matrix_path=args.matrix,
        solver=getattr(args, "solver", "gmres"),
        precision=getattr(args, "precision", "double"),
        m=args.restart,
        rtol=args.tol,
        max_iters=args.max_iters,
        precond=getattr(args, "precond", "none"),
        precond_precision=getattr(args, "precond_precision", None),
        switch_iter=getattr(args, "switch_iter", None),
        use_rcm=getattr(args, "rcm", False),
        rhs=getattr(args, "rhs", "ones"),
        seed=seed,
        repeat=getattr(args, "repeat", 1),
    )


def cmd_solve(args) -> int:
    spec = _spec_from_args(args)
    spec.validate()
    if args.dry_run:
        if spec.preset is not None:
            n, nnz = stencil_dimensions(spec.problem())
        else:
            A = read_matrix_market(spec.matrix_path)
            n, nnz = A.n, A.nnz
        print("N=%d NNZ=%d" % (n, nnz))
        return 0
    report, summary = run_experiment(spec)
    if args.history:
        write_history_csv(args.history, report.history)
    if args.summary:
        write_summary_json(args.summary, summary)
    status = "converged" if report.converged else "not converged"
    if getattr(report, "stalled", False):
        status += " (stalled)"
    print(
        "%s %s n=%d iters=%d restarts=%d relres=%.3e %s"
        % (
            spec.solver,
            summary["precision"],
            summary["n"],
            summary["total_iters"],
            summary["restarts"],
            summary["final_relres"],
            status,
        )
    )
    return 0 if report.converged else 2


def cmd_generate(args) -> int:
    spec = ProblemSpec(
        preset=args.preset,
        nx=args.nx,
        diffusion=args.diffusion,
        velocity=args.velocity,
        convection_strength=args.convection_strength,
        stretch_factor=args.stretch_factor,
    )
    if args.dry_run:
        n, nnz = stencil_dimensions(spec)
        print("N=%d NNZ=%d" % (n, nnz))
        return 0
    if not args.out:
        raise CliError("give --out PATH or --dry-run")
    A = generate_stencil(spec)
    write_matrix_market(A, args.out)
    print("N=%d NNZ=%d -> %s" % (A.n, A.nnz, args.out))
    return 0


def _parse_int_list(text, what):
    try:
        values = [int(p) for p in str(text).split(",") if p.strip() != ""]
    except ValueError:
        raise CliError("%s must be a comma-separated list of integers" % what)
    if not values:
        raise CliError("%s is empty" % what)
    return values


def cmd_sweep_switch(args) -> int:
    points = _parse_int_list(args.switch_points, "--switch-points")
    base = _spec_from_args(args)
    base.solver = "gmres-fd"
    rows = []
    all_converged = True
    for s in points:
        spec = dataclasses.replace(base, switch_iter=s)
        report, _ = run_experiment(spec)
        rows.append(
            (
                s,
                report.total_iters,
                report.phase_iters.get("single", 0),
                report.phase_iters.get("double", 0),
                report.converged,
            )
        )
        all_converged = all_converged and report.converged
    with open(args.output, "w", encoding="ascii") as f:
        f.write("switch_iter,total_iters,iters_single,iters_double,converged\n")
        for s, t, lo, hi, conv in rows:
            f.write("%d,%d,%d,%d,%s\n" % (s, t, lo, hi, "true" if conv else "false"))
    print("wrote %d rows to %s" % (len(rows), args.output))
    return 0 if all_converged else 2


def cmd_sweep_restart(args) -> int:
    sizes = _parse_int_list(args.sizes, "--sizes")
    base = _spec_from_args(args)
    rows = []
    all_converged = True
    for m in sizes:
        spec_d = dataclasses.replace(base, solver="gmres", precision="double", m=m)
        rep_d, _ = run_experiment(spec_d)
        spec_ir = dataclasses.replace(base, solver="gmres-ir", precision="double", m=m)
        rep_ir, _ = run_experiment(spec_ir)
        rows.append((m, rep_d.total_iters, rep_ir.total_iters))
        all_converged = all_converged and rep_d.converged and rep_ir.converged
    with open(args.output, "w", encoding="ascii") as f:
        f.write("m,iters_double,iters_ir\n")
        for m, itd, iti in rows:
            f.write("%d,%d,%d\n" % (m, itd, iti))
    print("wrote %d rows to %s" % (len(rows), args.output))
    return 0 if all_converged else 2


def cmd_model_spmv(args) -> int:
    model = spmv_speedup_model(SpmvModelInput(entries_per_row=args.entries_per_row, n=args.n))
    print("reads_double=%s" % model.reads_double)
    print("reads_float=%s" % model.reads_float)
    print("ratio=%s (%.12g)" % (model.ratio, float(model.ratio)))
    return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(message)


def _add_problem_args(p):
    p.add_argument("--preset", choices=PRESETS, default=None, help="built-in problem family")
    p.add_argument("--nx", type=int, default=32, help="grid points per axis")
    p.add_argument("--diffusion", type=float, default=1.0)
    p.add_argument("--velocity", type=float, default=1.0)
    p.add_argument("--convection-strength", type=float, default=100.0, dest="convection_strength")
    p.add_argument("--stretch-factor", type=float, default=50.0, dest="stretch_factor")


def _add_system_args(p):
    _add_problem_args(p)
    p.add_argument("--matrix", default=None, help="read the system from a Matrix Market file")
    p.add_argument("--rcm", action="store_true", help="reorder with reverse Cuthill-McKee")
    p.add_argument("--rhs", choices=("ones", "random"), default="ones")
    p.add_argument("--seed", type=int, default=None, help="seed for --rhs random (else MPK_SEED)")


def _add_solver_args(p):
    p.add_argument("--restart", type=int, default=50, help="restart length m")
    p.add_argument("--tol", type=float, default=1e-10, help="relative residual target")
    p.add_argument("--max-iters", type=int, default=100_000, dest="max_iters")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mpkrylov", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a preset matrix to a file")
    _add_problem_args(p)
    p.add_argument("--out", default=None, help="output Matrix Market path")
    p.add_argument("--dry-run", action="store_true", help="print N and NNZ only")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("solve", help="run one solver configuration")
    _add_system_args(p)
    _add_solver_args(p)
    p.add_argument("--solver", choices=SOLVERS, default="gmres")
    p.add_argument("--precision", choices=("single", "double"), default="double")
    p.add_argument("--precond", default="none", help="none, jacobi:K, or poly:D")
    p.add_argument(
        "--precond-precision",
        choices=("single", "double"),
        default=None,
        dest="precond_precision",
    )
    p.add_argument("--switch-iter", type=int, default=None, dest="switch_iter")
    p.add_argument("--history", default=None, help="write per-iteration CSV here")
    p.add_argument("--summary", default=None, help="write summary JSON here")
    p.add_argument("--repeat", type=int, default=1, help="repeat and report the median time")
    p.add_argument("--dry-run", action="store_true", help="print N and NNZ, skip the solve")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep-switch", help="iterations of gmres-fd per switch point")
    _add_system_args(p)
    _add_solver_args(p)
    p.add_argument("--precond", default="none")
    p.add_argument("--precond-precision", choices=("single", "double"), default=None,
                   dest="precond_precision")
    p.add_argument("--switch-points", required=True, dest="switch_points",
                   help="comma-separated switch iterations, multiples of the restart length")
    p.add_argument("--output", required=True, help="CSV output path")
    p.set_defaults(func=cmd_sweep_switch)

    p = sub.add_parser("sweep-restart", help="restart sweep: plain double vs refinement")
    _add_system_args(p)
    _add_solver_args(p)
    p.add_argument("--precond", default="none")
    p.add_argument("--precond-precision", choices=("single", "double"), default=None,
                   dest="precond_precision")
    p.add_argument("--sizes", required=True, help="comma-separated restart lengths")
    p.add_argument("--output", required=True, help="CSV output path")
    p.set_defaults(func=cmd_sweep_restart)

    p = sub.add_parser("model-spmv", help="memory-traffic speedup model")
    p.add_argument("--entries-per-row", type=float, required=True, dest="entries_per_row")
    p.add_argument("--n", type=int, default=1)
    p.set_defaults(func=cmd_model_spmv)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except CliError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1
    except (MpkError, ValueError, OSError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
