"""Acceptance criteria as runnable checks, shared by ``ropack bench`` and the test suite.

Every check builds its own corpus from a fixed seed, compares the library
against an independent computation where one exists, and returns a
:class:`CriterionResult` with the measured numbers.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .core import Instance, profit_of, project
from .hardgen import RandomSpec, gen_lower_bound, gen_random, structural_opt, verify_structure
from .harness import reference_opt, run_trial, run_trials, trial_rng
from .lp import solve_relaxation
from .matching import FeasibilityGraph, max_weight_matching
from .online import PhaseParams, check_trace, default_params, run_vgap, run_vmkp
from .oracle import lp_upper_bound, opt_branch_bound, opt_enumerate

LP_TOL = 1e-7
EPS_FEAS = 1e-9


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    seconds: float = 0.0
    detail: dict = field(default_factory=dict)

    def line(self) -> str:
        facts = ", ".join(f"{k}={_fmt(v)}" for k, v in self.detail.items())
        return (f"criterion {self.number} [{'PASS' if self.passed else 'FAIL'}] "
                f"{self.name} ({self.seconds:.1f}s): {facts}")


def _fmt(v):
    return f"{v:.6g}" if isinstance(v, float) else str(v)


def _timed(fn):
    def wrapper(*args, **kwargs):
        start = time.perf_counter()
        res = fn(*args, **kwargs)
        res.seconds = time.perf_counter() - start
        return res
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


# corpora

def small_instance(rng, n_max=10, m_max=3, d_max=3) -> Instance:
    """Random small instance; a third of them use coarse profits to force ties."""
    n = int(rng.integers(0, n_max + 1))
    m = int(rng.integers(1, m_max + 1))
    d = int(rng.integers(1, d_max + 1))
    variant = ["general", "general", "zero_one", "vmkp"][int(rng.integers(4))]
    spec = RandomSpec(n, m, d, variant=variant, heavy_fraction=float(rng.random()),
                      option_prob=float(rng.uniform(0.4, 1.0)), one_prob=float(rng.uniform(0.1, 0.6)))
    inst = gen_random(spec, rng)
    if rng.random() < 1 / 3 and n:
        coarse = np.round(inst.profits * 4) / 4
        inst = Instance(inst.capacities, inst.weights, coarse, inst.present, inst.variant)
    return inst


def oracle_corpus(count=1000, seed=2024):
    rng = np.random.default_rng(seed)
    return [small_instance(rng) for _ in range(count)]


# independent checks

def lp_violation(instance: Instance, values: np.ndarray) -> float:
    """Largest violation of the relaxation's constraints by ``values``."""
    worst = 0.0
    w = instance.weights.astype(float)
    caps = instance.capacities.astype(float)
    worst = max(worst, float(-values.min(initial=0.0)))
    worst = max(worst, float(values.max(initial=0.0)) - 1.0)
    worst = max(worst, float(np.abs(values[~instance.present]).max(initial=0.0)))
    worst = max(worst, float(values.sum(axis=1).max(initial=0.0)) - 1.0)
    for j in range(instance.m):
        for t in range(instance.d):
            load = math.fsum(w[i, j, t] * values[i, j] for i in range(instance.n))
            worst = max(worst, (load - caps[j, t]) / max(1.0, caps[j, t]))
    return worst


def brute_matching(weights: np.ndarray) -> float:
    """Maximum matching weight by trying every injective partial assignment."""
    n, m = weights.shape
    best = 0.0

    def go(i, used, chosen):
        nonlocal best
        if i == n:
            best = max(best, math.fsum(chosen))
            return
        go(i + 1, used, chosen)
        for j in range(m):
            if not used & (1 << j) and weights[i, j] > 0:
                chosen.append(weights[i, j])
                go(i + 1, used | (1 << j), chosen)
                chosen.pop()

    go(0, 0, [])
    return best


# criteria

@_timed
def criterion_oracle_exactness(count=1000, seed=2024, time_limit=60.0) -> CriterionResult:
    """Branch and bound equals enumeration bitwise on small random instances."""
    start = time.perf_counter()
    mismatches = []
    packing_diffs = 0
    for k, inst in enumerate(oracle_corpus(count, seed)):
        bb = opt_branch_bound(inst)
        en = opt_enumerate(inst)
        if not (bb.exact and bb.value == en.value):
            mismatches.append(k)
        if bb.packing.pairs() != en.packing.pairs():
            packing_diffs += 1
    in_time = time.perf_counter() - start < time_limit
    return CriterionResult(1, "oracle exactness", not mismatches and in_time,
                           detail={"instances": count, "mismatches": len(mismatches),
                                   "packing_differences": packing_diffs, "within_time": in_time})


@_timed
def criterion_lp_dominance(count=1000, seed=2024) -> CriterionResult:
    """LP bound dominates OPT; relaxation solutions satisfy every constraint."""
    below = 0
    worst = 0.0
    for inst in oracle_corpus(count, seed):
        opt = opt_enumerate(inst).value
        bound = lp_upper_bound(inst)
        if bound < opt - LP_TOL:
            below += 1
        worst = max(worst, lp_violation(inst, solve_relaxation(inst).values))
    return CriterionResult(2, "LP dominance and feasibility", below == 0 and worst <= EPS_FEAS,
                           detail={"instances": count, "bound_below_opt": below,
                                   "max_constraint_violation": worst})


@_timed
def criterion_matching(count=1000, seed=7) -> CriterionResult:
    """Maximum-weight matching equals brute force on random graphs up to 7x7."""
    rng = np.random.default_rng(seed)
    mismatches = 0
    for _ in range(count):
        n, m = int(rng.integers(1, 8)), int(rng.integers(1, 8))
        density = rng.uniform(0.2, 1.0)
        if rng.random() < 0.5:
            w = rng.integers(1, 4, size=(n, m)).astype(float)  # many ties
        else:
            w = rng.uniform(0.01, 1.0, size=(n, m))
        w[rng.random((n, m)) > density] = 0.0
        edges = tuple((i, j, float(w[i, j])) for i in range(n) for j in range(m) if w[i, j] > 0)
        got = max_weight_matching(FeasibilityGraph(tuple(range(n)), tuple(range(m)), edges))
        if got.weight != brute_matching(w):
            mismatches += 1
    return CriterionResult(3, "matching oracle", mismatches == 0,
                           detail={"graphs": count, "mismatches": mismatches})


def _random_params(rng, d, algorithm):
    if rng.random() < 0.5:
        return None
    a, b = sorted(rng.random(2))
    if algorithm == "vmkp":
        return PhaseParams(q=float(a))
    return PhaseParams(q1=float(a), q2=float(b))


@_timed
def criterion_feasibility(runs=100_000, seed=11) -> CriterionResult:
    """Every online run ends feasible and obeys the phase rules."""
    rng = np.random.default_rng(seed)
    done = 0
    violations = []
    per_algo = {"vgap": 0, "zvgap": 0, "vmkp": 0}
    k = 0
    while done < runs:
        inst = small_instance(rng, n_max=16, m_max=3, d_max=4)
        algos = ["vgap"] + {"zero_one": ["zvgap"], "vmkp": ["vmkp"]}.get(inst.variant, [])
        for algo in algos:
            params = _random_params(rng, inst.d, algo)
            if params is None:
                params = default_params(inst.d, {"vgap": "general", "zvgap": "zero_one",
                                                 "vmkp": "vmkp"}[algo])
            for t in range(25):
                _, problems, _ = run_trial(inst, algo, params, 1000 + k, t)
                done += 1
                per_algo[algo] += 1
                if problems:
                    violations.append((k, algo, t, problems[0]))
        k += 1
    return CriterionResult(4, "feasibility and phase discipline", not violations,
                           detail={"runs": done, **per_algo, "instances": k,
                                   "violations": len(violations)})


@_timed
def criterion_first_fit(runs=10_000, seed=13) -> CriterionResult:
    """Blocked VMKP rounds always follow total consumption of at least m/2."""
    rng = np.random.default_rng(seed)
    done = blocked = 0
    violations = 0
    k = 0
    while done < runs:
        m = int(rng.integers(2, 4))
        d = int(rng.integers(1, 4))
        n = int(rng.integers(4, 25))
        inst = gen_random(RandomSpec(n, m, d, variant="vmkp",
                                     heavy_fraction=float(rng.uniform(0.3, 1.0))), rng)
        q = float(rng.uniform(0.0, 0.7))
        for t in range(20):
            r = trial_rng(5000 + k, t)
            perm = r.permutation(n)
            packing, trace = run_vmkp(inst, perm, r, PhaseParams(q=q))
            for rd in trace.rounds:
                if rd.phase == "packing" and rd.j and rd.B == 0:
                    blocked += 1
                    if rd.cons < m / 2:
                        violations += 1
            if check_trace(inst, packing, trace):
                violations += 1
            done += 1
        k += 1
    return CriterionResult(5, "first-fit consumption", violations == 0,
                           detail={"runs": done, "blocked_rounds": blocked,
                                   "violations": violations})


def _ratio_check(number, name, variant, d, algorithm, instances=20, trials=10_000,
                 seed=17, time_limit=300.0):
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst = 0.0
    failures = 0
    lp_only = 0
    guarantee = None
    for k in range(instances):
        inst = gen_random(RandomSpec(40, 2, d, variant=variant), rng)
        opt = reference_opt(inst)
        lp_only += not opt.exact
        rep = run_trials(inst, algorithm, None, trials=trials, seed=seed * 1000 + k, opt=opt)
        guarantee = rep.guarantee
        worst = max(worst, rep.opt / (rep.mean + 3 * rep.stderr))
        failures += not rep.within_guarantee
    elapsed = time.perf_counter() - start
    return CriterionResult(number, name, failures == 0 and elapsed < time_limit,
                           detail={"instances": instances, "trials": trials,
                                   "guarantee": guarantee, "worst_opt_over_mean_3se": worst,
                                   "failures": failures, "opt_lp_bound_only": lp_only,
                                   "within_time": elapsed < time_limit})


@_timed
def criterion_ratio_gap(instances=20, trials=10_000) -> CriterionResult:
    return _ratio_check(6, "ratio direction d=1 GAP", "general", 1, "vgap", instances, trials)


@_timed
def criterion_ratio_vgap(instances=20, trials=10_000) -> CriterionResult:
    return _ratio_check(6, "ratio direction d=2 VGAP", "general", 2, "vgap", instances, trials)


@_timed
def criterion_ratio_vmkp(instances=20, trials=10_000) -> CriterionResult:
    return _ratio_check(6, "ratio direction d=1 VMKP m=2", "vmkp", 1, "vmkp", instances, trials)


def lower_bound_experiment(d: int, delta: int = 1, realizations=10_000, seed=19) -> dict:
    """Structure check, single-matrix optimum and the profit experiment for one (d, delta)."""
    lb = gen_lower_bound(d, delta, trial_rng(seed, 0))
    out = {}
    report = verify_structure(lb)
    out["structure_violations"] = sum(report["violations"].values())
    out["cross_pairs_checked"] = report["checked"]["cross_pairs"]
    # every matrix alone, all profits 1: optimum d by exact enumeration
    ones = lb.with_profits(np.ones(lb.spec.n))
    bad = 0
    for j in range(lb.spec.matrices):
        cols = range(j * d, (j + 1) * d)
        if opt_enumerate(project(ones.instance, cols)).value != d:
            bad += 1
    out["matrices_with_opt_not_d"] = bad
    profits, hits = [], []
    infeasible = 0
    for r in range(realizations):
        rng = trial_rng(seed, r + 1)
        real = lb.with_profits((rng.integers(0, d ** (delta + 1), size=lb.spec.n) == 0).astype(float))
        view = real.float_view()
        packing, _ = run_vgap(view, rng.permutation(lb.spec.n), rng)
        if not real.validate_packing(packing):
            infeasible += 1
        profits.append(profit_of(view, packing))
        hits.append(1.0 if structural_opt(real) == d else 0.0)
    T = len(profits)
    mean = math.fsum(profits) / T
    se = float(np.std(profits, ddof=1)) / math.sqrt(T)
    frac = math.fsum(hits) / T
    frac_se = float(np.std(hits, ddof=1)) / math.sqrt(T)
    out.update(mean_profit=mean, profit_bound=1 + 1 / d ** delta + 3 * se,
               opt_d_fraction=frac, fraction_bound=1 - math.exp(-delta) - 3 * frac_se,
               infeasible_packings=infeasible)
    out["ok"] = (out["structure_violations"] == 0 and bad == 0 and infeasible == 0
                 and mean <= out["profit_bound"] and frac >= out["fraction_bound"])
    return out


@_timed
def criterion_lower_bound(realizations=10_000, time_limit=600.0) -> CriterionResult:
    start = time.perf_counter()
    detail = {}
    ok = True
    for d in (2, 3):
        res = lower_bound_experiment(d, 1, realizations)
        ok &= res.pop("ok")
        detail.update({f"d{d}_{k}": v for k, v in res.items()})
    # structural optimum agrees with branch and bound on the small family
    lb = gen_lower_bound(2, 1, trial_rng(23, 0))
    agree = 0
    for r in range(5):
        real = lb.with_profits((trial_rng(23, r + 1).integers(0, 4, size=lb.spec.n) == 0).astype(float))
        agree += opt_branch_bound(real.instance).value == structural_opt(real)
    detail["d2_bb_agreement"] = f"{agree}/5"
    in_time = time.perf_counter() - start < time_limit
    detail["within_time"] = in_time
    return CriterionResult(7, "lower-bound construction", ok and agree == 5 and in_time,
                           detail=detail)


@_timed
def criterion_determinism(trials=300, seed=29) -> CriterionResult:
    """Reports are byte-identical across re-runs and parallelism 1 vs 8."""
    rng = np.random.default_rng(seed)
    cases = [(gen_random(RandomSpec(20, 2, 2), rng), "vgap"),
             (gen_random(RandomSpec(16, 2, 4, variant="zero_one"), rng), "zvgap"),
             (gen_random(RandomSpec(20, 3, 2, variant="vmkp"), rng), "vmkp")]
    same = 0
    for inst, algo in cases:
        a = run_trials(inst, algo, trials=trials, seed=seed, jobs=1).dumps()
        b = run_trials(inst, algo, trials=trials, seed=seed, jobs=1).dumps()
        c = run_trials(inst, algo, trials=trials, seed=seed, jobs=8).dumps()
        same += a == b == c
    return CriterionResult(8, "determinism", same == len(cases),
                           detail={"cases": len(cases), "identical": same})


CRITERIA = {
    1: [criterion_oracle_exactness],
    2: [criterion_lp_dominance],
    3: [criterion_matching],
    4: [criterion_feasibility],
    5: [criterion_first_fit],
    6: [criterion_ratio_gap, criterion_ratio_vgap, criterion_ratio_vmkp],
    7: [criterion_lower_bound],
    8: [criterion_determinism],
}


def run_criteria(numbers, log=None) -> list[CriterionResult]:
    results = []
    for k in numbers:
        for fn in CRITERIA[k]:
            res = fn()
            if log:
                log(res.line())
            results.append(res)
    return results
