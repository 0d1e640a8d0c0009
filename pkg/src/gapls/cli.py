"""Command-line entry point: ``gapls {solve,sweep,embed}``.

Exit status: 0 on success, 2 on usage errors, bad input files or parameters
outside every admissible regime, 3 when a solve or any sweep run does not
converge within ``--max-iter``.
"""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from . import formats
from .bench import ExperimentSpec, emit_csv, generate_instance, run_sweep
from .cone import embed, solve_cone_program
from .gap import AssumptionError, GapOperator, outer_alpha, validate
from .linesearch import LineSearchConfig
from .solver import affine_criterion, solve

__all__ = ["main", "build_parser"]

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_UNCONVERGED = 3

STRATEGY = {"forward": "forward_track", "golden": "golden_section"}
DEFAULT_GRID = tuple(round(1.0 + 0.1 * i, 1) for i in range(11))


def _grid(text: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty grid")
    return vals


def _common(p: argparse.ArgumentParser, max_iter: int) -> None:
    p.add_argument("--mode", choices=("none", "basic", "projected"), default="projected")
    p.add_argument("--alpha", type=float, help="outer relaxation (default 0.85/beta, or 0.85 if some alpha_i = 2)")
    p.add_argument("--eps", type=float, default=0.01, help="required residual decrease of a line search")
    p.add_argument("--alpha-max", type=float, help="largest line-search step (default alpha*1.4^18)")
    p.add_argument("--trigger-tol", type=float, default=1e-4)
    p.add_argument("--strategy", choices=tuple(STRATEGY), default="forward")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--m", type=int, default=50)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--max-iter", type=int, default=max_iter)
    p.add_argument("--out")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gapls", description="Generalized alternating projections with line search.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser(
        "solve",
        help="solve a cone-program or feasibility file, or a random nonnegative-feasibility instance",
    )
    s.add_argument("file", nargs="?", help="JSON file; omit to generate an instance from --seed/--m/--n")
    s.add_argument("--alpha1", type=float, default=1.95)
    s.add_argument("--alpha2", type=float, default=1.95)
    _common(s, 10**6)

    w = sub.add_parser("sweep", help="iteration counts over a grid of alpha_1 = alpha_2, written as CSV")
    w.add_argument("--grid", type=_grid, help="comma-separated alpha_1 values (default 1.0,1.1,...,2.0)")
    w.add_argument("--alpha1", type=float, help="single grid point; ignored when --grid is given")
    w.add_argument("--alpha2", type=float, help="accepted for symmetry; must equal alpha1")
    w.add_argument("--threads", type=int, help="worker threads (default: GAPLS_MAX_THREADS, else CPU count)")
    _common(w, 10**5)

    e = sub.add_parser("embed", help="write the primal-dual feasibility problem of a cone program")
    e.add_argument("file")
    e.add_argument("--out", required=True)
    return parser


def _ls_config(args) -> LineSearchConfig:
    return LineSearchConfig(
        epsilon=args.eps,
        alpha_max=args.alpha_max,
        trigger_tol=args.trigger_tol,
        strategy=STRATEGY[args.strategy],
    )


def _summary(res, extra: dict) -> dict:
    return {
        "converged": res.converged,
        "iterations": res.iterations,
        "monitor": res.monitor,
        "ls_triggered": res.stats.triggered,
        "ls_accepted": res.stats.accepted,
        "candidates_total": res.stats.candidates_total,
        "final_residual": res.final_residual,
        **extra,
    }


def _print(summary: dict) -> None:
    for k, v in summary.items():
        if k in ("solution", "x", "s", "y"):
            continue
        print(f"{k}: {v:.6g}" if isinstance(v, float) else f"{k}: {v}")


def _cmd_solve(args) -> int:
    alphas = (args.alpha1, args.alpha2)
    alpha = args.alpha if args.alpha is not None else outer_alpha(alphas)
    cfg = _ls_config(args)
    data = formats.load(args.file) if args.file else None

    if data is not None and "cones" in data:
        prog = formats.parse_cone_program(data)
        tol = args.tol if args.tol is not None else 1e-9
        sol, res = solve_cone_program(prog, alphas, alpha, args.mode, cfg, tol=tol, max_iter=args.max_iter)
        extra = {
            "kind": "cone_program",
            "objective": float(prog.c @ sol.x),
            "gap": sol.gap,
            "primal_residual": sol.primal_residual,
            "dual_residual": sol.dual_residual,
            "x": sol.x.tolist(),
            "s": sol.s.tolist(),
            "y": sol.y.tolist(),
        }
    else:
        tol = args.tol if args.tol is not None else 1e-10
        if data is not None:
            prob = formats.parse_feasibility(data)
            C, D, x0 = prob.affine_set(), prob.D, prob.x0
            kind = "feasibility"
        else:
            inst = generate_instance(ExperimentSpec(m=args.m, n=args.n, seed=args.seed))
            C, D, x0 = inst.C, inst.D, inst.x0
            kind = "random_instance"
        if x0 is None:
            x0 = np.zeros(C.dim)
        op = GapOperator([C, D], alphas, alpha)
        res = solve(op, x0, affine_criterion(C, D, tol), args.max_iter, args.mode, cfg)
        extra = {
            "kind": kind,
            "affine_residual": C.residual(res.solution),
            "distance_to_sets": D.distance(res.solution),
            "solution": res.solution.tolist(),
        }

    summary = _summary(res, {"alpha1": alphas[0], "alpha2": alphas[1], "alpha": alpha, **extra})
    _print(summary)
    if args.out:
        formats.save(summary, args.out)
    return EXIT_OK if res.converged else EXIT_UNCONVERGED


def _cmd_sweep(args) -> int:
    if args.grid is not None:
        grid = args.grid
    elif args.alpha1 is not None:
        grid = (args.alpha1,)
    else:
        grid = DEFAULT_GRID
    if args.alpha2 is not None and args.alpha2 != args.alpha1:
        raise ValueError("a sweep runs alpha_1 = alpha_2; pass --alpha1 or --grid only")
    # reject inadmissible grid points before any run starts
    for a in grid:
        validate((args.alpha if args.alpha is not None else outer_alpha((a, a)), (a, a)))
    spec = ExperimentSpec(
        m=args.m,
        n=args.n,
        seed=args.seed,
        alpha_grid=grid,
        alpha=args.alpha,
        mode=args.mode,
        tol=args.tol if args.tol is not None else 1e-10,
        max_iter=args.max_iter,
        ls=_ls_config(args),
    )
    if not args.out:
        raise ValueError("sweep needs --out PATH for the CSV")
    records = run_sweep(spec, args.threads)
    emit_csv(records, args.out)
    for r in records:
        print(f"alpha1={r.alpha1:g} mode={r.mode} iterations={r.iterations} converged={str(r.converged).lower()}")
    return EXIT_OK if all(r.converged for r in records) else EXIT_UNCONVERGED


def _cmd_embed(args) -> int:
    prog = formats.parse_cone_program(formats.load(args.file))
    prob = formats.embedded_to_feasibility(embed(prog))
    formats.save(formats.dump_feasibility(prob), args.out)
    print(f"embedded: {prob.A.shape[0]} rows x {prob.n} columns -> {args.out}")
    return EXIT_OK


COMMANDS = {"solve": _cmd_solve, "sweep": _cmd_sweep, "embed": _cmd_embed}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return COMMANDS[args.command](args)
    except AssumptionError as exc:
        parser.print_usage(sys.stderr)
        print(f"gapls: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, TypeError, OSError) as exc:
        print(f"gapls: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
