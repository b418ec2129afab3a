"""Random-order online algorithms for VGAP, {0,1}-VGAP and VMKP.

All three runners take an arrival order (a permutation of item indices), a
``numpy.random.Generator`` for their internal coin flips and a
:class:`PhaseParams`.  They return the final :class:`~ropack.core.Packing`
and a :class:`RunTrace` with one :class:`Round` per arrival.

Phase boundaries are ``floor(q * n)``: with ``s = floor(q1*n)`` and
``h = floor(q2*n)`` rounds ``1..s`` only sample, ``s+1..h`` use the
matching phase and ``h+1..n`` the LP phase.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .core import Instance, Packing, StructuralError, is_feasible, profit_of, split
from .lp import _greedy, sample_tentative, solve_relaxation
from .matching import EdgeKeys

# absorbs representation error in q*n when q is a rounded rational such as 2/3
_CUT_SLACK = 1e-9


@dataclass(frozen=True)
class PhaseParams:
    q1: float | None = None
    q2: float | None = None
    q: float | None = None

    def __post_init__(self):
        if (self.q1 is None) != (self.q2 is None):
            raise StructuralError("q1 and q2 must be given together")
        if self.q1 is not None and not 0 <= self.q1 <= self.q2 <= 1:
            raise StructuralError(f"need 0 <= q1 <= q2 <= 1, got {self.q1}, {self.q2}")
        if self.q is not None and not 0 <= self.q <= 1:
            raise StructuralError(f"need 0 <= q <= 1, got {self.q}")


def default_params(d: int, variant: str = "general", tuned: bool = True) -> PhaseParams:
    """Phase fractions from the competitive analysis of each algorithm.

    general: q2 = 2d/(2d+1), q1 = q2 / e^(1/4); for d = 1 the tuned pair
    (0.5256, 0.69) unless ``tuned`` is false.  zero_one: q2 = sqrt(d)/(sqrt(d)+1),
    q1 = q2 / sqrt(e).
    vmkp: q = 2d/(2d+1), plus the general pair so the instance can also be
    fed to :func:`run_vgap`.
    """
    if d < 1:
        raise StructuralError(f"dimension must be >= 1, got {d}")
    if variant == "zero_one":
        r = math.sqrt(d)
        q2 = r / (r + 1)
        return PhaseParams(q1=q2 / math.sqrt(math.e), q2=q2)
    if d == 1 and tuned:
        q1, q2 = 0.5256, 0.69
    else:
        q2 = 2 * d / (2 * d + 1)
        q1 = q2 / math.e ** 0.25
    if variant == "vmkp":
        return PhaseParams(q1=q1, q2=q2, q=2 * d / (2 * d + 1))
    if variant != "general":
        raise StructuralError(f"unknown variant {variant!r}")
    return PhaseParams(q1=q1, q2=q2)


def phase_cut(q: float, n: int) -> int:
    return min(n, max(0, math.floor(q * n + _CUT_SLACK)))


@dataclass
class Round:
    l: int
    phase: str
    i: int  # item (original index, 0-based)
    j: int  # tentative bin, 1-based; 0 = none
    commit: bool
    R: float
    cons: float  # total consumption of the packing before this round
    b: int = 0  # bin actually used, 1-based; 0 = none
    B: int | None = None  # |B_l| (first-fit candidates), VMKP only

    def to_json(self) -> dict:
        # files use 1-based item and bin indices, like instance files
        out = {"l": self.l, "phase": self.phase, "i": self.i + 1, "j": self.j,
               "commit": self.commit, "R": self.R, "cons": self.cons}
        if self.B is not None:
            out["b"] = self.b
            out["B"] = self.B
        return out


@dataclass
class RunTrace:
    algorithm: str
    n: int
    params: PhaseParams
    rounds: list = field(default_factory=list)
    # c(j, t): tentative consumption accumulated in the LP phase
    tentative_load: np.ndarray | None = None

    def profit(self) -> float:
        return math.fsum(r.R for r in self.rounds)

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r.to_json(), separators=(",", ":")) + "\n"
                       for r in self.rounds)


def _check_permutation(permutation, n: int) -> list:
    perm = [int(x) for x in permutation]
    if sorted(perm) != list(range(n)):
        raise StructuralError("permutation must be a bijection on the items")
    return perm


def _edge_keys(sub: Instance) -> EdgeKeys:
    # sub-instances are cached on the parent, so this is built once per instance
    if "keys" not in sub._cache:
        sub._cache["keys"] = EdgeKeys(np.where(sub.fits_alone(), sub.profits, 0.0))
    return sub._cache["keys"]


def _split_cached(instance: Instance, criterion: str):
    key = ("split", criterion)
    if key not in instance._cache:
        instance._cache[key] = split(instance, criterion)
    return instance._cache[key]


def _run_two_phase(instance, permutation, rng, params, criterion, names, algorithm):
    if params.q1 is None:
        raise StructuralError(f"{algorithm} needs q1 and q2")
    n = instance.n
    perm = _check_permutation(permutation, n)
    first, second = _split_cached(instance, criterion)
    keys = _edge_keys(first)
    has_edge = (keys.weights > 0).any(axis=1)
    usable = second.present & (second.profits > 0)
    s_cut, h_cut = phase_cut(params.q1, n), phase_cut(params.q2, n)
    packing = Packing(instance)
    trace = RunTrace(algorithm, n, params)
    load = np.zeros((instance.m, instance.d))
    weights = instance.weights
    order = np.asarray(perm, dtype=int)
    for l, i in enumerate(perm, 1):
        seen = order[:l]
        cons = float(packing.total_consumption())
        origin = instance.origin[i]
        if l <= s_cut:
            trace.rounds.append(Round(l, "sampling", origin, 0, False, 0.0, cons))
            continue
        if l <= h_cut:
            phase = names[0]
            # an item without edges is never matched
            j = keys.solve(seen).bin_of(i) if has_edge[i] else None
            ok = j is not None and packing.is_empty_bin(j)
        else:
            phase = names[1]
            j = None
            if usable[i].any():
                x = solve_relaxation(second, seen)
                j = sample_tentative(x, i, rng)
            if j is not None:
                load[j] += np.asarray(weights[i, j], dtype=float)
            ok = j is not None and packing.fits(i, j)
        R = 0.0
        if ok:
            packing.add(i, j, check=False)
            R = float(instance.profits[i, j])
        jj = 0 if j is None else j + 1
        trace.rounds.append(Round(l, phase, origin, jj, ok, R, cons, jj if ok else 0))
    trace.tentative_load = load
    return packing, trace


def run_vgap(instance: Instance, permutation, rng, params: PhaseParams | None = None):
    """Sampling, heavy (matching) and light (LP rounding) phases.

    Heavy phase: the arriving item's partner in the maximum-weight matching
    of the heavy options seen so far is its tentative bin; the item is
    committed only if that bin holds no item yet.  Light phase: the
    tentative bin is drawn from the item's row of an optimal fractional
    solution over the light options seen so far (solved with the full bin
    capacities), and committed if it still fits.
    """
    params = params or default_params(instance.d, "general")
    return _run_two_phase(instance, permutation, rng, params, "heavy_light",
                          ("heavy", "light"), "vgap")


def run_01_vgap(instance: Instance, permutation, rng, params: PhaseParams | None = None):
    """As :func:`run_vgap` but split into dense and sparse {0,1} options."""
    if instance.variant != "zero_one":
        raise StructuralError("run_01_vgap needs a zero_one instance")
    params = params or default_params(instance.d, "zero_one")
    return _run_two_phase(instance, permutation, rng, params, "dense_sparse",
                          ("dense", "sparse"), "zvgap")


def first_fit(consumption, capacities, weights) -> int | None:
    """Smallest bin index in which ``weights`` fits in every dimension."""
    consumption = np.asarray(consumption, dtype=float)
    capacities = np.asarray(capacities, dtype=float)
    w = np.asarray(weights, dtype=float)
    for j in range(len(consumption)):
        if np.all(consumption[j] + w <= capacities[j]):
            return j
    return None


def run_vmkp(instance: Instance, permutation, rng, params: PhaseParams | None = None,
             solver: str = "auto"):
    """Sampling phase, then LP-based accept/reject with First Fit placement.

    ``solver`` picks the fractional solver for the packing phase: "simplex",
    "greedy" (one-dimensional only) or "auto" (greedy when d = 1).
    """
    if instance.variant != "vmkp":
        raise StructuralError("run_vmkp needs a vmkp instance")
    params = params or default_params(instance.d, "vmkp")
    if params.q is None:
        raise StructuralError("run_vmkp needs q")
    if solver == "auto":
        solver = "greedy" if instance.d == 1 else "simplex"
    if solver == "greedy" and instance.d != 1:
        raise StructuralError("greedy fractional solver needs d = 1")
    n, m = instance.n, instance.m
    perm = _check_permutation(permutation, n)
    cut = phase_cut(params.q, n)
    packing = Packing(instance)
    trace = RunTrace("vmkp", n, params)
    order = np.asarray(perm, dtype=int)
    for l, i in enumerate(perm, 1):
        seen = order[:l]
        cons = float(packing.total_consumption())
        origin = instance.origin[i]
        if l <= cut:
            trace.rounds.append(Round(l, "sampling", origin, 0, False, 0.0, cons))
            continue
        j = None
        if instance.profits[i, 0] > 0:
            x = _greedy(instance, seen) if solver == "greedy" else solve_relaxation(instance, seen)
            j = sample_tentative(x, i, rng)
        fitting = [k for k in range(m) if packing.fits(i, k)]
        ok = j is not None and bool(fitting)
        R = 0.0
        if ok:
            packing.add(i, fitting[0], check=False)
            R = float(instance.profits[i, 0])
        jj = 0 if j is None else j + 1
        trace.rounds.append(Round(l, "packing", origin, jj, ok, R, cons,
                                  fitting[0] + 1 if ok else 0, len(fitting)))
    return packing, trace


ALGORITHMS = {"vgap": run_vgap, "zvgap": run_01_vgap, "vmkp": run_vmkp}


def check_trace(instance: Instance, packing: Packing, trace: RunTrace) -> list[str]:
    """Violations of the structural guarantees of one run (empty list = clean).

    Checks final feasibility, the trace-sum identity, the absence of
    sampling-phase commits, the per-phase option classes, the one-item
    rule for matching-phase commits and, for VMKP with m >= 2, that every
    blocked round of an item that fits an empty bin saw total consumption
    of at least m/2.
    """
    bad = []
    if not is_feasible(instance, packing):
        bad.append("final packing infeasible")
    if trace.profit() != profit_of(instance, packing):
        bad.append("round profits do not sum to packing profit")
    index = {o: k for k, o in enumerate(instance.origin)}
    heavy = instance.heavy_mask()
    fits_alone = instance.fits_alone()
    dense = instance.dense_mask() if trace.algorithm == "zvgap" else None
    members = [0] * instance.m
    n = trace.n
    params = trace.params
    if trace.algorithm == "vmkp":
        s_cut, h_cut = phase_cut(params.q, n), phase_cut(params.q, n)
    else:
        s_cut, h_cut = phase_cut(params.q1, n), phase_cut(params.q2, n)
    for r in trace.rounds:
        if r.R > 0 and not r.commit:
            bad.append(f"round {r.l}: profit without commit")
        expected = ("sampling" if r.l <= s_cut else
                    "packing" if trace.algorithm == "vmkp" else
                    {"vgap": "heavy", "zvgap": "dense"}[trace.algorithm] if r.l <= h_cut else
                    {"vgap": "light", "zvgap": "sparse"}[trace.algorithm])
        if r.phase != expected:
            bad.append(f"round {r.l}: phase {r.phase}, expected {expected}")
        # an item that fits an empty bin can only be blocked by well-filled bins
        if trace.algorithm == "vmkp" and instance.m >= 2 and r.j and r.B == 0 \
                and fits_alone[index[r.i]].any():
            if r.cons < instance.m / 2:
                bad.append(f"round {r.l}: blocked with consumption {r.cons} < m/2")
        if not r.commit:
            continue
        i, j = index[r.i], r.b - 1
        if r.phase == "sampling":
            bad.append(f"round {r.l}: commit during sampling")
        elif r.phase in ("heavy", "light"):
            if heavy[i, j] != (r.phase == "heavy"):
                bad.append(f"round {r.l}: {r.phase} phase used a wrong-class option")
        elif r.phase in ("dense", "sparse"):
            if dense[i, j] != (r.phase == "dense"):
                bad.append(f"round {r.l}: {r.phase} phase used a wrong-class option")
        if r.phase in ("heavy", "dense") and members[j]:
            bad.append(f"round {r.l}: matching-phase commit into occupied bin {j + 1}")
        if r.phase != "packing" and r.b != r.j:
            bad.append(f"round {r.l}: committed bin differs from tentative bin")
        members[j] += 1
        if packing.bin_of(i) != j:
            bad.append(f"round {r.l}: commit missing from final packing")
    return bad
