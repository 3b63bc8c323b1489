"""Command-line front end: solve, converge, verify-integrals, cost,
schedule, battery.

Benchmark cases are named builtins (``--case grad-dependent-sine``) or
key=value case files (``--case my_problem.txt``); user-defined PDEs enter
only through the library API.  The draw budget of the cost guard can be
set with the MLPICARD_COST_BUDGET environment variable.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from .bounds import (
    AdmissibilityViolated,
    NoFeasibleDepth,
    cost_bound_closed,
    cost_rv,
    schedule as solve_schedule,
)
from .core import InvalidProblem, MlpConfig, to_canonical
from .engine import DepthCostGuard, QueryAtTerminalTime, replicate, rmse
from .harness import (
    BUILTIN_CASES,
    BenchmarkCase,
    UnknownCase,
    builtin_case,
    load_case_file,
    run_convergence,
    run_test_battery,
    verify_integral_identities,
    write_csv,
)

__all__ = ["main"]


def _load_case(spec: str, dimension: int) -> BenchmarkCase:
    if os.path.exists(spec):
        return load_case_file(spec)
    return builtin_case(spec, dimension=dimension)


def _parse_point(text: str | None, dimension: int) -> np.ndarray:
    if text is None:
        return np.zeros(dimension)
    parts = [float(p) for p in text.split(",") if p.strip() != ""]
    if len(parts) == 1:
        return np.full(dimension, parts[0])
    if len(parts) != dimension:
        raise SystemExit(
            f"error: --x needs 1 or {dimension} comma-separated numbers, "
            f"got {len(parts)}")
    return np.array(parts)


def _parse_m_rule(text: str):
    """Either ``fixed:M`` or ``floor-n^q`` with a numeric exponent q."""
    if text.startswith("fixed:"):
        m = int(text.split(":", 1)[1])
        if m < 1:
            raise SystemExit("error: fixed M must be >= 1")
        return lambda n: m
    if text.startswith("floor-n^"):
        q = float(text[len("floor-n^"):])
        return lambda n: max(1, math.floor(n**q))
    raise SystemExit(
        f"error: --m-rule must be 'floor-n^q' or 'fixed:M', got {text!r}")


def _cmd_solve(args: argparse.Namespace) -> int:
    case = _load_case(args.case, args.d)
    canonical, tmap = to_canonical(case.problem)
    s = tmap(args.t) if args.t is not None else 0.0
    if not 0.0 <= s < canonical.horizon:
        raise SystemExit(
            f"error: query time maps to canonical {s}, outside "
            f"[0, {canonical.horizon})")
    x = _parse_point(args.x, canonical.dimension)
    config = MlpConfig(depth=args.n, base=args.M, root_seed=args.seed,
                       replications=args.reps)
    estimates = replicate(canonical, config, s, x, workers=args.workers)
    vectors = np.stack([est.as_vector() for est in estimates])
    mean = vectors.mean(axis=0)
    se = vectors.std(axis=0, ddof=1) / math.sqrt(len(estimates)) \
        if len(estimates) > 1 else np.zeros_like(mean)
    print(f"case: {case.name}")
    print(f"query: t={float(tmap.inverse(s))!r} x={x.tolist()!r}")
    print(f"replications: {len(estimates)}  draws/estimate: "
          f"{estimates[0].draws}")
    print(f"value: {float(mean[0])!r} (stderr {se[0]:.3e})")
    for i in range(canonical.dimension):
        print(f"grad[{i}]: {float(mean[1 + i])!r} (stderr {se[1 + i]:.3e})")
    ref_value, ref_gradient = case.exact(tmap.inverse(s), x)
    report = rmse(estimates, ref_value, ref_gradient)
    print(f"exact value: {float(ref_value)!r}")
    print(f"rmse_value: {float(report.rmse_value)!r}  "
          f"rmse_grad_max: {float(report.rmse_gradient_max)!r}")
    return 0


def _cmd_converge(args: argparse.Namespace) -> int:
    case = _load_case(args.case, args.d)
    rule = _parse_m_rule(args.m_rule)
    schedule = [(n, rule(n)) for n in range(1, args.n_max + 1)]
    rows = run_convergence(
        case, schedule, replications=args.reps, seed=args.seed,
        t=args.t, x=_parse_point(args.x, to_canonical(case.problem)[0].dimension),
        include_timing=args.timing, workers=args.workers)
    write_csv(rows, args.out)
    print(f"wrote {len(rows)} rows to {args.out}")
    for row in rows:
        print(f"n={row.n} M={row.base} combined={row.combined_error:.6g} "
              f"bound={row.error_bound:.6g} draws={row.draws}")
    return 0


def _cmd_verify_integrals(args: argparse.Namespace) -> int:
    rows, ok = verify_integral_identities()
    header = (f"{'j':>2} {'alpha':>6} {'beta':>5} {'gamma':>5} "
              f"{'closed':>14} {'quadrature':>14} {'rel_gap':>10} ok")
    print(header)
    for row in rows:
        print(f"{row['j']:>2} {row['alpha']:>6.2f} {row['beta']:>5.2f} "
              f"{row['gamma']:>5.2f} {row['closed']:>14.8g} "
              f"{row['quadrature']:>14.8g} {row['rel_gap']:>10.2e} "
              f"{'yes' if row['ok'] else 'NO'}")
    print(f"all identities hold: {'yes' if ok else 'NO'}")
    return 0 if ok else 1


def _cmd_cost(args: argparse.Namespace) -> int:
    exact = cost_rv(args.d, args.n, args.M)
    closed = cost_bound_closed(args.d, args.n, args.M)
    print(f"draws(d={args.d}, n={args.n}, M={args.M}) = {exact}")
    print(f"closed bound d(5M)^n = {closed}")
    return 0


def _cmd_schedule(args: argparse.Namespace) -> int:
    case = _load_case(args.case, args.d)
    if case.norm_overrides is None:
        raise SystemExit(f"error: case {case.name} carries no norm data")
    canonical, _ = to_canonical(case.problem)
    try:
        n, base, cost = solve_schedule(
            args.eps, canonical.dimension, case.norm_overrides,
            p=args.p, alpha=args.alpha, m_rule_exponent=args.q,
            horizon=canonical.horizon, t=0.0,
            u_moment_override=case.u_moment_override)
    except AdmissibilityViolated as exc:
        raise SystemExit(f"error: {exc}")
    except NoFeasibleDepth as exc:
        print(f"infeasible: {exc}")
        return 2
    print(f"case: {case.name}  target accuracy: {args.eps}")
    print(f"depth n = {n}, base M = {base}, predicted draws = {cost}")
    return 0


def _cmd_battery(args: argparse.Namespace) -> int:
    report = run_test_battery(seed=args.seed, fast=args.fast,
                              time_cdf_exponent=args.e)
    for line in report.lines():
        print(line)
    print(f"battery: {'PASS' if report.passed else 'FAIL'}")
    return 0 if report.passed else 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mlpicard",
        description=(
            "Full-history recursive multilevel Picard solver for semilinear "
            "heat equations: joint (value, gradient) estimates at a point "
            "with exact draw-cost accounting."),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_case(p, with_point=True):
        p.add_argument("--case", required=True,
                       help=f"builtin name ({', '.join(BUILTIN_CASES)}) "
                            "or a key=value case file")
        p.add_argument("--d", type=int, default=1,
                       help="dimension for builtin names (default 1)")
        p.add_argument("--seed", type=int, default=0)
        if with_point:
            p.add_argument("--t", type=float, default=None,
                           help="query time in the case's own clock "
                                "(default: start of the backward interval)")
            p.add_argument("--x", type=str, default=None,
                           help="comma-separated query point "
                                "(scalar broadcasts; default origin)")

    p_solve = sub.add_parser("solve", help="replicated estimate at a point")
    add_case(p_solve)
    p_solve.add_argument("--n", type=int, required=True, help="depth")
    p_solve.add_argument("--M", type=int, required=True, help="base")
    p_solve.add_argument("--reps", type=int, default=100)
    p_solve.add_argument("--workers", type=int, default=1)
    p_solve.set_defaults(fn=_cmd_solve)

    p_conv = sub.add_parser("converge", help="error table over depths")
    add_case(p_conv)
    p_conv.add_argument("--n-max", type=int, required=True)
    p_conv.add_argument("--m-rule", type=str, default="floor-n^0.25",
                        help="'floor-n^q' or 'fixed:M' (default floor-n^0.25)")
    p_conv.add_argument("--reps", type=int, default=100)
    p_conv.add_argument("--out", type=str, required=True, help="CSV path")
    p_conv.add_argument("--timing", action="store_true",
                        help="record real wall_seconds (breaks byte-identical "
                             "reproducibility)")
    p_conv.add_argument("--workers", type=int, default=1)
    p_conv.set_defaults(fn=_cmd_converge)

    p_verify = sub.add_parser("verify-integrals",
                              help="closed form vs quadrature vs bounds")
    p_verify.set_defaults(fn=_cmd_verify_integrals)

    p_cost = sub.add_parser("cost", help="exact draw count and closed bound")
    p_cost.add_argument("--d", type=int, required=True)
    p_cost.add_argument("--n", type=int, required=True)
    p_cost.add_argument("--M", type=int, required=True)
    p_cost.set_defaults(fn=_cmd_cost)

    p_sched = sub.add_parser("schedule",
                             help="smallest depth meeting a target accuracy")
    add_case(p_sched, with_point=False)
    p_sched.add_argument("--eps", type=float, required=True)
    p_sched.add_argument("--p", type=float, default=4.0)
    p_sched.add_argument("--alpha", type=float, default=0.5)
    p_sched.add_argument("--q", type=float, default=0.25,
                         help="growth exponent of M = floor(n^q)")
    p_sched.set_defaults(fn=_cmd_schedule)

    p_batt = sub.add_parser("battery", help="statistical test battery")
    p_batt.add_argument("--seed", type=int, default=0)
    p_batt.add_argument("--fast", action="store_true",
                        help="trimmed sample counts")
    p_batt.add_argument("--e", type=float, default=0.5,
                        help="time CDF exponent for the variance diagnostic")
    p_batt.set_defaults(fn=_cmd_battery)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (InvalidProblem, UnknownCase, QueryAtTerminalTime,
            DepthCostGuard, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
