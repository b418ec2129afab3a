"""Command line entry point: ``ropack run | gen | lbgen | opt | bench``."""

from __future__ import annotations

import argparse
import json
import sys

from .core import StructuralError, load_instance, save_instance, to_json
from .hardgen import RandomSpec, gen_lower_bound, gen_random, verify_structure
from .harness import InvariantViolation, run_trials, trial_rng
from .lp import SolverError
from .online import PhaseParams
from .oracle import solve_opt


def _write(text: str, path: str | None) -> None:
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_run(args) -> int:
    inst = load_instance(args.inst)
    params = None
    if args.q is not None or args.q1 is not None or args.q2 is not None:
        params = PhaseParams(q1=args.q1, q2=args.q2, q=args.q)
    report = run_trials(inst, args.algo, params, trials=args.trials, seed=args.seed,
                        jobs=args.jobs, trace_dir=args.trace_dir)
    _write(report.dumps(), args.output)
    if args.output:
        print(f"mean {report.mean:.6g}  OPT{'' if report.opt_exact else ' (LP bound)'} "
              f"{report.opt:.6g}  ratio {report.ratio:.4g}  guarantee {report.guarantee:.4g}")
    return 0


def cmd_gen(args) -> int:
    import numpy as np

    spec = RandomSpec(args.n, args.m, args.d, variant=args.variant,
                      heavy_fraction=args.heavy_fraction, option_prob=args.option_prob,
                      profit_dist=args.profit_dist)
    inst = gen_random(spec, np.random.default_rng(args.seed))
    _write(json.dumps(to_json(inst)) + "\n", args.output)
    return 0


def cmd_lbgen(args) -> int:
    lb = gen_lower_bound(args.d, args.delta, trial_rng(args.seed, 0), float_safe=args.float_safe)
    report = verify_structure(lb)
    if not report["ok"]:
        print(json.dumps(report), file=sys.stderr)
        return 2
    if args.output:
        save_instance(lb.instance, args.output, exact=True)
        print(f"n={lb.spec.n} matrices={lb.spec.matrices} eps={lb.spec.epsilon} "
              f"profitable={int(lb.profits.sum())}  structure verified")
    else:
        _write(json.dumps(to_json(lb.instance, exact=True)) + "\n", None)
    return 0


def cmd_opt(args) -> int:
    inst = load_instance(args.instance, exact=args.exact)
    res = solve_opt(inst, args.method)
    print(json.dumps(res.to_json()))
    return 0


def cmd_bench(args) -> int:
    from .acceptance import CRITERIA, run_criteria

    only = [int(x) for x in args.only.split(",")] if args.only else sorted(CRITERIA)
    results = run_criteria(only, log=lambda line: print(line, flush=True))
    print()
    print(f"{'#':>2}  {'result':6}  {'seconds':>8}  criterion")
    for r in results:
        print(f"{r.number:>2}  {'PASS' if r.passed else 'FAIL':6}  {r.seconds:8.1f}  {r.name}")
    return 0 if all(r.passed for r in results) else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ropack",
                                description="Random-order online vector assignment and knapsack")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run seeded random-order trials and report statistics")
    r.add_argument("--inst", required=True, help="instance JSON file")
    r.add_argument("--algo", required=True, choices=["vgap", "zvgap", "vmkp"])
    r.add_argument("--q1", type=float)
    r.add_argument("--q2", type=float)
    r.add_argument("--q", type=float)
    r.add_argument("--trials", type=int, default=10_000)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--jobs", type=int, default=1)
    r.add_argument("-o", "--output")
    r.add_argument("--trace-dir")
    r.set_defaults(func=cmd_run)

    g = sub.add_parser("gen", help="generate a random instance")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--m", type=int, required=True)
    g.add_argument("--d", type=int, default=1)
    g.add_argument("--variant", choices=["general", "zero_one", "vmkp"], default="general")
    g.add_argument("--heavy-fraction", type=float, default=0.5)
    g.add_argument("--option-prob", type=float, default=1.0)
    g.add_argument("--profit-dist", choices=["uniform", "correlated"], default="uniform")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("-o", "--output")
    g.set_defaults(func=cmd_gen)

    lb = sub.add_parser("lbgen", help="generate a verified lower-bound instance")
    lb.add_argument("--d", type=int, required=True)
    lb.add_argument("--delta", type=int, default=1)
    lb.add_argument("--seed", type=int, default=0)
    lb.add_argument("--float-safe", action="store_true")
    lb.add_argument("-o", "--output")
    lb.set_defaults(func=cmd_lbgen)

    o = sub.add_parser("opt", help="offline optimum of an instance")
    o.add_argument("instance")
    o.add_argument("--method", choices=["bb", "enum", "lp"], default="bb")
    o.add_argument("--exact", action="store_true", help="read weights as exact rationals")
    o.set_defaults(func=cmd_opt)

    b = sub.add_parser("bench", help="run the acceptance suite and print a pass/fail table")
    b.add_argument("--only", help="comma-separated criterion numbers, e.g. 1,3")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 3
    except (StructuralError, SolverError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
