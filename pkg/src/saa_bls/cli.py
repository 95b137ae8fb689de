"""Command-line front end: ``saa-bls {run,sweep,schedule,check}``."""

from __future__ import annotations

import argparse
import csv
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import checks, experiments, retrospective
from .problems import ConfigurationError, make_problem
from .retrospective import RaConfig


def _float_list(text):
    return tuple(float(t) for t in text.split(","))


def _int_list(text):
    return tuple(int(float(t)) for t in text.split(","))


def _add_problem_flags(p):
    g = p.add_argument_group("problem")
    g.add_argument("--problem", required=True, choices=["poisson1d", "poisson-multi", "heavy", "mean"],
                   help="objective to minimise (required)")
    g.add_argument("--d", type=int, default=20, help="dimension for poisson-multi (default: 20)")
    g.add_argument("--problem-seed", type=int, default=0, help="seed for a* in poisson-multi (default: 0)")
    g.add_argument("--nu", type=float, default=1.501, help="Student-t degrees of freedom for heavy (default: 1.501)")
    g.add_argument("--dist", default="normal:0:1",
                   help="distribution for mean: point:c | normal:mu:sigma | t:mu:nu (default: normal:0:1)")


def _add_ra_flags(p, budget=True):
    g = p.add_argument_group("algorithm")
    if budget:
        g.add_argument("--budget", type=lambda s: int(float(s)), default=10**6, help="computational budget B (default: 1e6)")
    g.add_argument("--alpha", type=float, default=1.0, help="rate parameter alpha' in (0, 1] (default: 1)")
    g.add_argument("--delta", type=float, default=0.95, help="schedule parameter delta in [0, 1) (default: 0.95)")
    g.add_argument("--J", type=int, default=10_000, help="maximum number of stages (default: 10000)")
    g.add_argument("--kappa", type=float, default=1.0, help="sample-size multiplier (default: 1)")
    g.add_argument("--tau", type=float, default=1.0, help="base gradient tolerance (default: 1)")
    g.add_argument("--beta", type=float, default=0.5, help="backtracking factor (default: 0.5)")
    g.add_argument("--min-n", type=int, default=100, help="floor on stage sample sizes, 0 disables (default: 100)")
    g.add_argument("--c-eval", type=int, default=1, help="cost of one f evaluation (default: 1)")
    g.add_argument("--c-grad", type=int, default=1, help="cost of one gradient evaluation (default: 1)")
    g.add_argument("--theta0", type=_float_list, default=(1.0,),
                   help="starting point, scalar or comma list; a scalar is broadcast (default: 1)")
    g.add_argument("--final-stage-tau-zero", action="store_true",
                   help="use tolerance 0 in stage J (default: off)")


def _problem(args):
    if args.problem == "poisson-multi":
        return make_problem("poisson-multi", d=args.d, seed=args.problem_seed)
    if args.problem == "heavy":
        return make_problem("heavy", nu=args.nu)
    if args.problem == "mean":
        return make_problem("mean", dist=args.dist)
    return make_problem("poisson1d")


def _ra_config(args, budget=None):
    return RaConfig(
        theta0=args.theta0,
        budget=args.budget if budget is None else budget,
        alpha_prime=args.alpha,
        delta=args.delta,
        J=args.J,
        kappa=args.kappa,
        tau=args.tau,
        beta=args.beta,
        min_n=args.min_n,
        c_eval=args.c_eval,
        c_grad=args.c_grad,
        final_stage_tau_zero=args.final_stage_tau_zero,
    )


def _fmt(x):
    return format(float(x), ".17g")


def cmd_run(args) -> int:
    problem = _problem(args)
    cfg = _ra_config(args)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        cfg.check_rate_range()
    res = retrospective.run(problem, cfg, args.seed)
    err = float(np.linalg.norm(res.theta_hat - problem.theta_star))
    theta = ",".join(format(t, ".6g") for t in res.theta_hat)
    print(f"theta_hat=[{theta}] error={err:.6g} J_B={res.j_used} consumed={res.total_consumed} "
          f"remaining={res.remaining} stop={res.stop_reason}")
    if args.stage_csv:
        with open(args.stage_csv, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["j", "gamma", "n", "tau", "iterations", "consumed", "remaining", "stop_reason", "grad_norm"])
            for st, r in res.stage_records:
                w.writerow([st.j, _fmt(st.gamma), st.n, _fmt(st.tau), r.iterations, r.consumed, r.remaining,
                            str(r.stop_reason), "" if math.isnan(r.grad_norm) else _fmt(r.grad_norm)])
    return 0


def cmd_sweep(args) -> int:
    problem = _problem(args)
    if args.budgets:
        grid = args.budgets
    else:
        lo, hi, pts = args.grid
        grid = tuple(experiments.log_grid(lo, hi, int(pts)))
    if len(set(grid)) != len(grid):
        raise ConfigurationError(f"duplicate budgets in grid {grid}")
    cfg = experiments.SweepConfig(
        problem=problem,
        budget_grid=grid,
        replications=args.replications,
        ra=_ra_config(args, budget=grid[0]),
        trim_fraction=args.trim,
        error_metric=args.metric,
        base_seed=args.seed,
        method=args.method,
        c_n=args.c_n,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    summaries = experiments.sweep(cfg, jobs=args.jobs)
    experiments.write_summary_csv(out / "summary.csv", summaries)
    experiments.write_replications_csv(out / "replications.csv", summaries)
    errs = [s.error(args.metric) for s in summaries]
    if len(summaries) >= 2 and all(e > 0 for e in errs):
        print(f"slope={experiments.loglog_slope(grid, errs):.4f}")
    if len(summaries) >= 2 and args.method == "ra":
        try:
            print(f"rho_JB={experiments.rho_jb(summaries):.4f}")
        except ValueError as exc:
            print(f"rho_JB=undefined ({exc})")
    print(f"wrote {out / 'summary.csv'} and {out / 'replications.csv'}")
    return 0


def cmd_schedule(args) -> int:
    cfg = _ra_config(args)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        cfg.check_rate_range()
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    print(f"{'j':>5} {'gamma':>12} {'n':>12} {'tau':>14}")
    for j in range(1, min(cfg.J, args.rows) + 1):
        st = retrospective.schedule(cfg.budget, cfg, j)
        print(f"{st.j:>5} {st.gamma:>12.6g} {st.n:>12d} {st.tau:>14.6g}")
    return 0


def cmd_check(args) -> int:
    ok = checks.run_suites(only=args.only, inject_fault=args.inject_fault)
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="saa-bls",
        description="Budget-constrained noisy optimisation with multi-stage GD-BLS.",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run the multi-stage procedure once")
    _add_problem_flags(p)
    _add_ra_flags(p)
    p.add_argument("--seed", type=int, default=0, help="seed of the sample sequence (default: 0)")
    p.add_argument("--stage-csv", default=None, help="write a per-stage CSV here (default: none)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="replicated runs over a budget grid; writes summary.csv and replications.csv")
    _add_problem_flags(p)
    _add_ra_flags(p, budget=False)
    p.add_argument("--budgets", type=_int_list, default=None, help="comma-separated budgets (overrides --grid)")
    p.add_argument("--grid", type=_float_list, default=(4.0, 6.0, 7.0),
                   help="lo_exp,hi_exp,points for a log-spaced grid (default: 4,6,7)")
    p.add_argument("--replications", type=int, default=100, help="replications per budget (default: 100)")
    p.add_argument("--trim", type=float, default=0.1, help="trimmed-mean fraction per tail (default: 0.1)")
    p.add_argument("--metric", choices=["mean", "trimmed"], default="mean", help="error used for the slope (default: mean)")
    p.add_argument("--method", choices=["ra", "single"], default="ra",
                   help="multi-stage (ra) or single-stage SAA with alpha=--alpha (default: ra)")
    p.add_argument("--c-n", type=float, default=1.0, help="sample-size constant for --method single (default: 1)")
    p.add_argument("--seed", type=int, default=0, help="base seed (default: 0)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes (default: 1)")
    p.add_argument("--out", default=".", help="output directory (default: .)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("schedule", help="print the stage schedule without running anything")
    _add_ra_flags(p)
    p.add_argument("--rows", type=int, default=10, help="number of stages to print (default: 10)")
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("check", help="run the property suites")
    p.add_argument("--only", action="append", choices=sorted(checks.SUITES), default=None,
                   help="run only this suite (repeatable; default: all)")
    p.add_argument("--inject-fault", choices=["budget"], default=None,
                   help="use a deliberately broken budget meter (for testing the checker)")
    p.set_defaults(func=cmd_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigurationError as exc:
        parser.error(str(exc))
    except OSError as exc:
        print(f"saa-bls: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
