"""LP relaxation of the assignment program and fractional tentative sampling."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._simplex import OPTIMAL, solve_items_lp, solve_packing_lp, within_tolerance
from .core import Instance, StructuralError

EPS_FEAS = 1e-9
EPS_OPT = 1e-7
SHRINK_TOL = 1e-6  # largest uniform scale-down used to repair rounding drift
MAX_PIVOTS = 200_000


class SolverError(RuntimeError):
    """The simplex kernel failed (iteration guard, unboundedness, residual check)."""


@dataclass(frozen=True)
class FractionalSolution:
    """``values[i, j]`` is x_{i,j}; absent options are 0."""

    values: np.ndarray
    objective: float

    def row(self, i: int) -> np.ndarray:
        return self.values[i]

    def to_json(self) -> dict:
        x = {f"{i + 1},{j + 1}": float(v) for (i, j), v in np.ndenumerate(self.values) if v}
        return {"obj": float(self.objective), "x": x}


def _float_data(instance: Instance):
    if instance.exact:
        return (instance.weights.astype(float), instance.capacities.astype(float))
    return instance.weights, instance.capacities


def build_lp(instance: Instance, items=None):
    """Constraint data for the relaxation restricted to ``items`` (default: all).

    Returns ``(A, b, c, opt_items, opt_bins)`` where column ``v`` is the option
    ``(opt_items[v], opt_bins[v])``.  Rows are the ``m * d`` capacity rows
    followed by one row per item.  Zero-profit options never enter an optimal
    basis and are left out.
    """
    if items is None:
        weights, caps = _float_data(instance)
        return assemble_lp(weights, caps, instance.profits, instance.present & (instance.profits > 0))
    keep = np.zeros(instance.n, dtype=bool)
    keep[np.asarray(items, dtype=int)] = True
    weights, caps = _float_data(instance)
    return assemble_lp(weights, caps, instance.profits,
                       instance.present & (instance.profits > 0) & keep[:, None])


def _full_lp(instance: Instance):
    # the all-items LP, cached on the (immutable) instance
    if "lp" not in instance._cache:
        weights, caps = _float_data(instance)
        usable = instance.present & (instance.profits > 0)
        A, b, c, oi, oj = assemble_lp(weights, caps, instance.profits, usable)
        md = instance.m * instance.d
        instance._cache["lp"] = (A, b[:md].copy(), c, oi.astype(np.int64), oj,
                                 usable.any(axis=1))
    return instance._cache["lp"]


def assemble_lp(weights, caps, profits, usable):
    """LP arrays for the options selected by the boolean (n, m) mask ``usable``."""
    m, d = caps.shape
    opt_items, opt_bins = np.nonzero(usable)
    item_ids, item_row = np.unique(opt_items, return_inverse=True)
    cols = len(opt_items)
    rows = m * d + len(item_ids)
    A = np.zeros((rows, cols))
    if cols:
        v = np.arange(cols)
        cap_rows = opt_bins[:, None] * d + np.arange(d)[None, :]
        A[cap_rows, v[:, None]] = weights[opt_items, opt_bins, :]
        A[m * d + item_row, v] = 1.0
    b = np.concatenate([np.asarray(caps, dtype=float).reshape(-1), np.ones(len(item_ids))])
    c = np.asarray(profits[opt_items, opt_bins], dtype=float)
    return A, b, c, opt_items, opt_bins


def solve_relaxation(instance: Instance, items=None) -> FractionalSolution:
    """Optimal vertex of the LP relaxation (deterministic for identical input).

    ``items`` restricts the LP to a subset of items, which is the same as
    solving on the projected sub-instance but keeps the original indices.
    """
    values = np.zeros((instance.n, instance.m))
    if items is None:
        A, b, c, oi, oj = build_lp(instance)
        x = _solve(A, b, c)
        values[oi, oj] = x
        return FractionalSolution(values, math.fsum(c * x))
    A, caps, c, oi, oj, has_opt = _full_lp(instance)
    keep = np.zeros(instance.n, dtype=bool)
    keep[np.asarray(items, dtype=int)] = True
    status, cols, x, feasible = solve_items_lp(A, caps, c, oi, has_opt, keep, MAX_PIVOTS,
                                               EPS_FEAS, SHRINK_TOL)
    if status != OPTIMAL:
        raise SolverError(f"simplex terminated with status {status}")
    if not feasible:
        raise SolverError("feasibility residual exceeds tolerance")
    values[oi[cols], oj[cols]] = x
    return FractionalSolution(values, math.fsum(c[cols] * x))


def lp_value(weights, caps, profits, usable) -> float:
    """Upper bound on the relaxation over the options in ``usable``.

    Any prices ``y >= 0`` give ``c.x <= b.y + sum(max(0, c - A^T y))`` for
    every feasible ``x`` (each ``x_k <= 1`` through its item row).  With the
    simplex's final prices this equals the optimum when the tableau is
    accurate, and stays a valid bound when rounding drift has crept in,
    which happens on nearly parallel columns.
    """
    A, b, c, _, _ = assemble_lp(weights, caps, profits, usable)
    if len(c) == 0:
        return 0.0
    _, _, y = solve_packing_lp(A, b, c, MAX_PIVOTS)
    y = np.maximum(y, 0.0)
    gap = np.maximum(c - A.T @ y, 0.0)
    return math.fsum(np.concatenate([b * y, gap]))


def _solve(A, b, c) -> np.ndarray:
    if len(c) == 0:
        return np.zeros(0)
    status, x, _ = solve_packing_lp(A, b, c, MAX_PIVOTS)
    if status != OPTIMAL:
        raise SolverError(f"simplex terminated with status {status}")
    np.minimum(x, 1.0, out=x)
    if not within_tolerance(A, b, x, EPS_FEAS, SHRINK_TOL):
        residual = A @ x - b
        raise SolverError(f"feasibility residual {residual.max():.3g} exceeds tolerance")
    return x


def greedy_fractional(instance: Instance) -> FractionalSolution:
    """Fractional optimum of a one-dimensional VMKP instance by density order.

    Items are taken by decreasing profit/weight (zero weight first, ties by
    index) until the total capacity ``m`` is used up.  The chosen amounts
    are laid into the bins in wrap-around order, so at most ``m - 1`` items
    are split between two bins.
    """
    if instance.variant != "vmkp" or instance.d != 1:
        raise StructuralError("greedy_fractional needs a one-dimensional vmkp instance")
    return _greedy(instance, range(instance.n))


def _greedy(instance: Instance, items) -> FractionalSolution:
    m = instance.m
    weights = instance.weights[:, 0, 0].astype(float)
    profits = instance.profits[:, 0]
    values = np.zeros((instance.n, m))

    def key(i):
        w, p = weights[i], profits[i]
        return (-math.inf if w == 0 else -p / w, i)

    order = sorted((i for i in items if profits[i] > 0), key=key)
    remaining = float(m)
    b, room = 0, 1.0
    for i in order:
        w = weights[i]
        if w == 0:
            values[i, 0] = 1.0
            continue
        if remaining <= 0:
            break
        frac = 1.0 if w <= remaining else remaining / w
        remaining -= frac * w
        left = frac
        while left > 0 and b < m:
            take = min(left, room / w)
            values[i, b] += take
            left -= take
            room -= take * w
            if room <= 1e-15 * m:
                b, room = b + 1, 1.0
    return FractionalSolution(values, math.fsum(profits * values.sum(axis=1)))


def sample_tentative(solution: FractionalSolution, i: int, rng) -> int | None:
    """Bin ``j`` with probability x_{i,j}, ``None`` with the remaining mass.

    One uniform draw is compared against the running sum over bins in
    ascending order.
    """
    u = rng.random()
    acc = 0.0
    for j, x in enumerate(solution.values[i]):
        if x <= 0:
            continue
        acc += x
        if u < acc:
            return j
    return None
