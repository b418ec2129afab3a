"""Seeded random-order trials, aggregate statistics and JSON reports."""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import Instance, StructuralError, profit_of
from .online import ALGORITHMS, PhaseParams, check_trace, default_params
from .oracle import OptResult, SizeGuardError, lp_upper_bound, opt_branch_bound

SCHEMA = 1
Z99 = 2.5758293035489004  # two-sided 99% normal quantile
ALGO_VARIANT = {"vgap": "general", "zvgap": "zero_one", "vmkp": "vmkp"}
HARNESS_NODE_BUDGET = 200_000


class InvariantViolation(RuntimeError):
    """A trial produced an infeasible packing or broke a phase rule."""

    def __init__(self, trial: int, problems: list[str]):
        super().__init__(f"trial {trial}: " + "; ".join(problems[:5]))
        self.trial = trial
        self.problems = problems


def report_guarantee(d: int, variant: str = "general") -> float:
    """Competitive-ratio guarantee c (OPT <= c * E[ALG]) for the matching algorithm."""
    if d < 1:
        raise StructuralError(f"dimension must be >= 1, got {d}")
    if variant == "general":
        return 6.99 if d == 1 else math.e ** 0.25 * (4 * d + 2)
    if variant == "zero_one":
        return 2 * math.sqrt(math.e) * (math.sqrt(d) + 2)
    if variant == "vmkp":
        return 5.29 if d == 1 else 4 * d + 2
    raise StructuralError(f"unknown variant {variant!r}")


def trial_rng(master_seed: int, t: int) -> np.random.Generator:
    """Independent PCG64 stream for trial ``t``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(master_seed, spawn_key=(t,))))


def check_algorithm(instance: Instance, algorithm: str) -> None:
    if algorithm not in ALGORITHMS:
        raise StructuralError(f"unknown algorithm {algorithm!r}; choose from {sorted(ALGORITHMS)}")
    need = {"zvgap": "zero_one", "vmkp": "vmkp"}.get(algorithm)
    if need and instance.variant != need:
        raise StructuralError(f"{algorithm} needs a {need} instance, got {instance.variant}")


def resolve_params(instance: Instance, algorithm: str, params: PhaseParams | None) -> PhaseParams:
    return params or default_params(instance.d, ALGO_VARIANT[algorithm])


def run_trial(instance: Instance, algorithm: str, params: PhaseParams, master_seed: int, t: int):
    """One trial: permutation then algorithm coins, both from the trial stream.

    Returns ``(profit, problems, trace)``.
    """
    rng = trial_rng(master_seed, t)
    perm = rng.permutation(instance.n)
    packing, trace = ALGORITHMS[algorithm](instance, perm, rng, params)
    problems = check_trace(instance, packing, trace)
    return profit_of(instance, packing), problems, trace


def _run_chunk(args):
    instance, algorithm, params, seed, ts, trace_dir = args
    out = []
    for t in ts:
        profit, problems, trace = run_trial(instance, algorithm, params, seed, t)
        if trace_dir is not None:
            with open(os.path.join(trace_dir, f"trial_{t:06d}.jsonl"), "w") as fh:
                fh.write(trace.to_jsonl())
        out.append((t, profit, problems))
    return out


@dataclass
class TrialReport:
    instance_id: str
    algorithm: str
    params: dict
    trials: int
    seed: int
    profits: list = field(repr=False)
    mean: float = 0.0
    std: float = 0.0
    stderr: float = 0.0
    ci99: tuple = (0.0, 0.0)
    opt: float | None = None
    opt_exact: bool = False
    opt_method: str | None = None
    ratio: float | None = None  # OPT / mean
    inverse_ratio: float | None = None  # mean / OPT
    guarantee: float = math.inf
    within_guarantee: bool | None = None

    def to_json(self) -> dict:
        out = {"schema": SCHEMA}
        out.update(asdict(self))
        out["ci99"] = list(self.ci99)
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=1) + "\n"


def summarize(profits: list) -> tuple[float, float, float]:
    """Mean, sample standard deviation and standard error."""
    T = len(profits)
    mean = math.fsum(profits) / T
    var = math.fsum((p - mean) ** 2 for p in profits) / (T - 1) if T > 1 else 0.0
    std = math.sqrt(var)
    return mean, std, std / math.sqrt(T)


def reference_opt(instance: Instance, node_budget: int = HARNESS_NODE_BUDGET) -> OptResult:
    """Exact optimum if branch and bound finishes within budget, else the LP bound."""
    try:
        res = opt_branch_bound(instance, node_budget)
    except SizeGuardError:
        res = None
    if res is not None and res.exact:
        return res
    return OptResult(lp_upper_bound(instance), None, 0 if res is None else res.node_count,
                     "lp_bound_only", exact=False)


def run_trials(instance: Instance, algorithm: str, params: PhaseParams | None = None,
               trials: int = 10_000, seed: int = 0, jobs: int = 1,
               opt: OptResult | float | None = None, trace_dir: str | None = None,
               instance_id: str | None = None) -> TrialReport:
    """Run ``trials`` independent random-order trials and aggregate them.

    Trial ``t`` depends only on (instance, algorithm, params, seed, t), so
    the report does not depend on ``jobs``.  Every trial is checked with
    :func:`~ropack.online.check_trace`; the first violation (in trial order)
    raises :class:`InvariantViolation`.  ``opt`` may be a precomputed
    optimum; by default it comes from :func:`reference_opt`.
    """
    if trials < 1:
        raise StructuralError("need at least one trial")
    check_algorithm(instance, algorithm)
    params = resolve_params(instance, algorithm, params)
    if trace_dir is not None:
        os.makedirs(trace_dir, exist_ok=True)
    ts = list(range(trials))
    if jobs <= 1:
        results = _run_chunk((instance, algorithm, params, seed, ts, trace_dir))
    else:
        chunks = [ts[k::jobs] for k in range(jobs)]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = pool.map(_run_chunk, [(instance, algorithm, params, seed, c, trace_dir)
                                          for c in chunks if c])
            results = [r for part in parts for r in part]
    results.sort(key=lambda r: r[0])
    for t, _, problems in results:
        if problems:
            raise InvariantViolation(t, problems)
    profits = [p for _, p, _ in results]
    mean, std, stderr = summarize(profits)
    if opt is None:
        opt = reference_opt(instance)
    if isinstance(opt, OptResult):
        opt_value, opt_exact, opt_method = opt.value, opt.exact, opt.method
    else:
        opt_value, opt_exact, opt_method = float(opt), True, "given"
    guarantee = report_guarantee(instance.d, ALGO_VARIANT[algorithm])
    return TrialReport(
        instance_id=instance_id or instance.digest(),
        algorithm=algorithm,
        params={k: v for k, v in asdict(params).items() if v is not None},
        trials=trials,
        seed=seed,
        profits=profits,
        mean=mean,
        std=std,
        stderr=stderr,
        ci99=(mean - Z99 * stderr, mean + Z99 * stderr),
        opt=opt_value,
        opt_exact=opt_exact,
        opt_method=opt_method,
        ratio=opt_value / mean if mean > 0 else (1.0 if opt_value == 0 else math.inf),
        inverse_ratio=mean / opt_value if opt_value > 0 else None,
        guarantee=guarantee,
        within_guarantee=bool(opt_value <= guarantee * (mean + 3 * stderr)),
    )
