"""Offline optima: exhaustive enumeration, LP-bounded branch and bound, LP bound.

Both exact methods maximise the correctly rounded profit sum and break ties
towards the lexicographically smallest assignment vector ``a`` where
``a[i] = 0`` leaves item ``i`` out and ``a[i] = j + 1`` puts it in bin
``j``.  Zero-profit options are never needed for that optimum (dropping
such an item keeps the value and makes the vector smaller), so both
methods skip them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Instance, Packing, StructuralError, sum_within
from .lp import EPS_OPT, lp_value, solve_relaxation

ENUM_LIMIT = 10**7
NODE_BUDGET = 10**6


class SizeGuardError(StructuralError):
    """Instance too large for exhaustive enumeration."""


@dataclass
class OptResult:
    value: float
    packing: Packing | None
    node_count: int
    method: str
    exact: bool = True

    def to_json(self) -> dict:
        pairs = [] if self.packing is None else [[i + 1, j + 1] for i, j in self.packing.pairs()]
        return {"value": self.value, "packing": pairs, "nodes": self.node_count,
                "method": self.method, "exact": self.exact}


def _choices(instance: Instance) -> list[list[int]]:
    usable = instance.present & (instance.profits > 0)
    return [[int(j) for j in np.flatnonzero(usable[i])] for i in range(instance.n)]


def opt_enumerate(instance: Instance, limit: int = ENUM_LIMIT) -> OptResult:
    """Exact optimum by depth-first enumeration of every feasible assignment.

    Assignments are visited in lexicographic order of ``a`` and a new one
    replaces the incumbent only if strictly better.
    """
    n, m = instance.n, instance.m
    if (m + 1) ** n > limit:
        raise SizeGuardError(f"(m+1)^n = {m + 1}^{n} exceeds enumeration limit {limit}")
    choices = _choices(instance)
    profits = instance.profits.tolist()
    weights = instance.weights.tolist()
    caps = instance.capacities.tolist()
    d = instance.d
    members: list[list[int]] = [[] for _ in range(m)]
    chosen: list[tuple[int, int]] = []
    best_val = 0.0
    best_pairs: list[tuple[int, int]] = []
    nodes = 0

    def fits(i: int, j: int) -> bool:
        ms = members[j]
        return all(sum_within([weights[k][j][t] for k in ms] + [weights[i][j][t]], caps[j][t])
                   for t in range(d))

    def visit(i: int) -> None:
        nonlocal best_val, best_pairs, nodes
        nodes += 1
        if i == n:
            val = math.fsum(profits[a][b] for a, b in chosen)
            if val > best_val:
                best_val, best_pairs = val, list(chosen)
            return
        visit(i + 1)
        for j in choices[i]:
            if fits(i, j):
                members[j].append(i)
                chosen.append((i, j))
                visit(i + 1)
                chosen.pop()
                members[j].pop()

    visit(0)
    return OptResult(best_val, Packing.from_pairs(instance, best_pairs), nodes, "enumeration")


def _restore(packing: Packing, saved: Packing) -> None:
    packing._bin_of = saved._bin_of
    packing._members = saved._members
    packing.consumption = saved.consumption
    packing._total = saved._total


class _BranchAndBound:
    def __init__(self, instance: Instance, node_budget: int):
        self.inst = instance
        self.budget = node_budget
        self.nodes = 0
        self.exhausted = False
        self.weights = instance.weights.astype(float) if instance.exact else instance.weights
        self.caps = instance.capacities.astype(float)
        self.usable = instance.present & (instance.profits > 0)
        best_profit = np.where(self.usable, instance.profits, 0.0).max(axis=1, initial=0.0)
        self.order = sorted(range(instance.n), key=lambda i: (-best_profit[i], i))
        self.packing = Packing(instance)
        self.assign = [0] * instance.n
        self.best_val = 0.0
        self.best_vec = tuple([0] * instance.n)

    def residual_mask(self, remaining):
        load = self.packing.consumption.astype(float)
        room = self.caps - load
        slack = 1e-12 * np.maximum(1.0, self.caps)
        mask = np.zeros_like(self.usable)
        rem = np.asarray(remaining, dtype=int)
        if rem.size:
            fits = np.all(self.weights[rem] <= (room + slack)[None, :, :], axis=2)
            mask[rem] = self.usable[rem] & fits
        return mask, room

    def bound(self, depth: int) -> float:
        """Upper bound on the profit obtainable from items order[depth:]."""
        remaining = self.order[depth:]
        mask, room = self.residual_mask(remaining)
        if not mask.any():
            return 0.0
        cheap = math.fsum(self.inst.profits[i][mask[i]].max() for i in remaining if mask[i].any())
        return min(cheap, lp_value(self.weights, np.maximum(room, 0.0), self.inst.profits, mask))

    def tol(self) -> float:
        return EPS_OPT * max(1.0, abs(self.best_val))

    def leaf(self) -> None:
        vec = tuple(self.assign)
        val = math.fsum(self.inst.profits[i, a - 1] for i, a in enumerate(vec) if a)
        if val > self.best_val or (val == self.best_val and vec < self.best_vec):
            self.best_val, self.best_vec = val, vec

    def search(self, depth: int, current: float, bound: float) -> None:
        if self.nodes >= self.budget:
            self.exhausted = True
            return
        self.nodes += 1
        if current + bound < self.best_val - self.tol():
            return
        if depth == len(self.order) or bound == 0.0:
            self.leaf()
            return
        i = self.order[depth]
        children = []
        for j in [None] + [int(j) for j in np.flatnonzero(self.usable[i])]:
            if j is None:
                children.append((current + self.bound(depth + 1), 0, None))
            elif self.packing.fits(i, j):
                saved = self.packing.copy()
                self.packing.add(i, j, check=False)
                gain = float(self.inst.profits[i, j])
                children.append((current + gain + self.bound(depth + 1), j + 1, j))
                _restore(self.packing, saved)
        # best bound first; equal bounds in bin order with "none" first
        children.sort(key=lambda c: (-c[0], c[1]))
        for child_bound, _, j in children:
            if child_bound < self.best_val - self.tol():
                continue
            if j is None:
                self.search(depth + 1, current, child_bound - current)
            else:
                saved = self.packing.copy()
                self.packing.add(i, j, check=False)
                self.assign[i] = j + 1
                gain = float(self.inst.profits[i, j])
                self.search(depth + 1, current + gain, child_bound - current - gain)
                self.assign[i] = 0
                _restore(self.packing, saved)


def opt_branch_bound(instance: Instance, node_budget: int = NODE_BUDGET) -> OptResult:
    """Exact optimum by depth-first branch and bound with LP relaxation bounds.

    Items are branched on in order of decreasing best profit; each node
    tries "leave out" and every bin the item still fits, best bound first.
    A subtree is cut only when its bound is below the incumbent by more
    than the LP tolerance, so every optimal assignment is reached and the
    lexicographic tie-break matches :func:`opt_enumerate`.  If the node
    budget runs out, the incumbent is returned with ``exact=False``.
    """
    bb = _BranchAndBound(instance, node_budget)
    bb.search(0, 0.0, bb.bound(0))
    pairs = [(i, a - 1) for i, a in enumerate(bb.best_vec) if a]
    return OptResult(bb.best_val, Packing.from_pairs(instance, pairs), bb.nodes,
                     "branch_and_bound", exact=not bb.exhausted)


def lp_upper_bound(instance: Instance) -> float:
    return solve_relaxation(instance).objective


def solve_opt(instance: Instance, method: str = "bb", node_budget: int = NODE_BUDGET) -> OptResult:
    """Dispatch on ``method`` in {"bb", "enum", "lp"}."""
    if method == "enum":
        return opt_enumerate(instance)
    if method == "bb":
        return opt_branch_bound(instance, node_budget)
    if method == "lp":
        return OptResult(lp_upper_bound(instance), None, 0, "lp_bound_only", exact=False)
    raise StructuralError(f"unknown method {method!r}")
