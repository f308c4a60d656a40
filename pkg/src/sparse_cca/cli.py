"""Command-line front end.

Exit codes: 0 success, 2 input error, 3 solver or model error, 4 budget
refusal from the exhaustive oracle.
"""
from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from contextlib import ExitStack
from pathlib import Path

from . import csvio
from .errors import BudgetExceededError, InputError, SparseCCAError, TrialError
from .experiments import (
    METHODS,
    MODES,
    ExperimentConfig,
    large_scale_path,
    regularization_experiment,
    sparsity_tradeoff_experiment,
)
from .greedy import APPROXIMATE, EXACT, GreedyConfig, run_greedy
from .model import (
    CovarianceTriple,
    DataSet,
    diagonalize_marginals,
    estimate_covariance,
    identity_marginals,
    ridge_regularize,
    wishart_sample,
)
from .oracle import DEFAULT_BUDGET, exhaustive_sparse_cca, oracle_curve
from .solver import solve_cca

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_SOLVER = 3
EXIT_BUDGET = 4

VARIANTS = {
    "cca": lambda cov: cov,
    "pls": identity_marginals,
    "dcca": diagonalize_marginals,
}


def _add_input_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("input (covariance files, paired data, or a Wishart draw)")
    g.add_argument("--cov-x", metavar="F", help="n x n covariance of x")
    g.add_argument("--cov-y", metavar="F", help="m x m covariance of y")
    g.add_argument("--cov-xy", metavar="F", help="n x m cross covariance")
    g.add_argument("--x", metavar="F", help="N x n samples of x, one row per sample")
    g.add_argument("--y", metavar="F", help="N x m samples of y")
    g.add_argument(
        "--center",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="subtract column means before estimating (default: on)",
    )
    g.add_argument("--header", action="store_true", help="skip one header row per file")
    g.add_argument(
        "--wishart",
        nargs=2,
        type=int,
        metavar=("N", "M"),
        help="use a random Wishart triple with n=N, m=M",
    )
    g.add_argument("--seed", type=int, default=0, help="Wishart seed (default 0)")
    g.add_argument("--dof", type=int, help="Wishart degrees of freedom (default n+m)")
    p.add_argument("--ridge-x", type=float, default=0.0, metavar="EPS")
    p.add_argument("--ridge-y", type=float, default=0.0, metavar="EPS")
    p.add_argument("--variant", choices=sorted(VARIANTS), default="cca")


def load_triple(args) -> CovarianceTriple:
    cov_files = (args.cov_x, args.cov_y, args.cov_xy)
    data_files = (args.x, args.y)
    sources = [any(cov_files), any(data_files), args.wishart is not None]
    if sum(sources) != 1:
        raise InputError(
            "give exactly one of --cov-x/--cov-y/--cov-xy, --x/--y, or --wishart"
        )
    if any(cov_files):
        if not all(cov_files):
            raise InputError("--cov-x, --cov-y and --cov-xy must be given together")
        cov = CovarianceTriple(*(csvio.read_matrix(f, args.header) for f in cov_files))
    elif any(data_files):
        if not all(data_files):
            raise InputError("--x and --y must be given together")
        data = DataSet(csvio.read_matrix(args.x, args.header), csvio.read_matrix(args.y, args.header))
        cov = estimate_covariance(data, center=args.center)
    else:
        n, m = args.wishart
        dof = args.dof if args.dof is not None else n + m
        cov = wishart_sample(args.seed, n + m, dof, n)
    if args.ridge_x or args.ridge_y:
        cov = ridge_regularize(cov, args.ridge_x, args.ridge_y)
    return VARIANTS[args.variant](cov)


def _threads(args) -> int:
    if args.threads is None:
        return os.cpu_count() or 1
    if args.threads < 1:
        raise InputError("--threads must be at least 1")
    return args.threads


def _open_out(stack: ExitStack, path: str | None):
    if path is None:
        return sys.stdout
    return stack.enter_context(open(path, "w", encoding="utf-8", newline=""))


def _companion(path: str) -> str:
    p = Path(path)
    return str(p.with_name(p.stem + "_weights" + p.suffix))


def cmd_solve(args) -> int:
    sol = solve_cca(load_triple(args))
    rows = [("rho", None, sol.rho)]
    rows += [("a", i, w) for i, w in zip(sol.pattern.I, sol.a)]
    rows += [("b", j, w) for j, w in zip(sol.pattern.J, sol.b)]
    csvio.write_rows(sys.stdout, ("name", "index", "value"), rows)
    return EXIT_OK


def cmd_greedy(args) -> int:
    cov = load_triple(args)
    config = GreedyConfig(
        args.ka, args.kb, EXACT if args.mode == "exact" else APPROXIMATE, args.direction
    )
    threads = _threads(args)
    with ExitStack() as stack:
        pool = stack.enter_context(ThreadPoolExecutor(threads)) if threads > 1 else None
        path = run_greedy(cov, config, pool)
    weights_out = args.weights_out or (_companion(args.out) if args.out else None)
    with ExitStack() as stack:
        csvio.write_path(_open_out(stack, args.out), path)
        if weights_out:
            csvio.write_path_weights(_open_out(stack, weights_out), path)
    if args.solve_counts:
        print(f"solve_count,{path.solve_count}", file=sys.stderr)
    return EXIT_OK


def cmd_oracle(args) -> int:
    cov = load_triple(args)
    if args.curve is not None:
        points = oracle_curve(cov, args.curve, args.budget)
        weights_out = args.weights_out or (_companion(args.out) if args.out else None)
        with ExitStack() as stack:
            csvio.write_oracle_curve(_open_out(stack, args.out), points)
            if weights_out:
                csvio.write_oracle_weights(_open_out(stack, weights_out), points)
        return EXIT_OK
    if args.ka is None or args.kb is None:
        raise InputError("oracle needs --ka and --kb, or --curve T")
    sol = exhaustive_sparse_cca(cov, args.ka, args.kb, args.budget)
    rows = [("rho", None, sol.rho)]
    rows += [("a", i, w) for i, w in zip(sol.pattern.I, sol.a)]
    rows += [("b", j, w) for j, w in zip(sol.pattern.J, sol.b)]
    with ExitStack() as stack:
        csvio.write_rows(_open_out(stack, args.out), ("name", "index", "value"), rows)
    return EXIT_OK


EXPERIMENT_DEFAULTS = {
    "tradeoff": dict(n=7, m=7, trials=200, modes=",".join(MODES), methods="CCA"),
    "largescale": dict(n=100, m=100, trials=1, modes="forward-approx", methods="CCA"),
    "regularize": dict(n=10, m=10, trials=500, modes="forward-approx", methods="CCA,PLS,DCCA"),
}


def cmd_experiment(args) -> int:
    defaults = EXPERIMENT_DEFAULTS[args.name]
    pick = lambda key: getattr(args, key) if getattr(args, key) is not None else defaults[key]
    config = ExperimentConfig(
        n=pick("n"),
        m=pick("m"),
        trials=pick("trials"),
        seed=args.seed,
        dof=args.dof,
        N=args.samples,
        methods=tuple(s.strip() for s in pick("methods").split(",")),
        modes=tuple(s.strip() for s in pick("modes").split(",")),
        budget=args.budget,
    )
    threads = _threads(args)
    if args.name == "tradeoff":
        table = sparsity_tradeoff_experiment(config, threads)
    elif args.name == "largescale":
        table = large_scale_path(config)
    else:
        table = regularization_experiment(config, threads)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = f"{args.name}_{config.digest(args.name)}"
    target = out_dir / f"{stem}.csv"
    with open(target, "w", encoding="utf-8", newline="") as fh:
        csvio.write_curve_table(fh, table)
    print(target)
    if table.notes:
        with open(out_dir / f"{stem}_notes.csv", "w", encoding="utf-8", newline="") as fh:
            csvio.write_rows(fh, ("key", "value"), sorted(table.notes.items()))
        for key, value in sorted(table.notes.items()):
            print(f"{key},{value}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sparse-cca", description="Sparse canonical correlation analysis."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="full CCA; prints rho and weights as CSV")
    _add_input_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("greedy", help="greedy sparsity path")
    _add_input_flags(p)
    p.add_argument("--ka", type=int, required=True)
    p.add_argument("--kb", type=int, required=True)
    p.add_argument("--mode", choices=("exact", "approx"), default="approx")
    p.add_argument("--direction", choices=("forward", "backward"), default="forward")
    p.add_argument("--out", help="path CSV (default: stdout)")
    p.add_argument("--weights-out", help="weights CSV (default: <out>_weights.csv)")
    p.add_argument("--solve-counts", action="store_true", help="report CCA solve count on stderr")
    p.add_argument("--threads", type=int, help="candidate workers (default: all cores)")
    p.set_defaults(func=cmd_greedy)

    p = sub.add_parser("oracle", help="exhaustive search over sparsity patterns")
    _add_input_flags(p)
    p.add_argument("--ka", type=int)
    p.add_argument("--kb", type=int)
    p.add_argument("--curve", type=int, metavar="T", help="optimal curve up to total cardinality T")
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    p.add_argument("--out")
    p.add_argument("--weights-out")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("experiment", help="Monte Carlo experiments")
    p.add_argument("name", choices=sorted(EXPERIMENT_DEFAULTS))
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dof", type=int)
    p.add_argument("--samples", type=int, default=20, help="N per trial (regularize)")
    p.add_argument("--methods", help=f"comma list from {','.join(METHODS)}")
    p.add_argument("--modes", help=f"comma list from {','.join(MODES)}")
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    p.add_argument("--out-dir", default=".")
    p.add_argument("--threads", type=int, help="trial workers (default: all cores)")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BudgetExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except TrialError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT if isinstance(exc.__cause__, InputError) else EXIT_SOLVER
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SparseCCAError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
