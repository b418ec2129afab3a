"""Maximum-weight bipartite matching on the single-item feasibility graph.

Ties between maximum-weight matchings are broken towards the
lexicographically smallest pair list (pairs sorted by item, then bin).
Writing a matching as the vector ``a`` with ``a[i]`` the bin of item ``i``
(unmatched = +inf), that is the lexicographically smallest ``a``.  The
order is realised exactly: each float weight is scaled to an integer
(floats are dyadic rationals), shifted left by ``n`` base-``K`` digits and
given the digit ``m - j`` at position ``n - 1 - i``.  Every matching then
has a distinct integer total, and the Hungarian method on those integers
has a unique optimum.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .core import Instance

SMALL_BINS = 3


@dataclass(frozen=True)
class FeasibilityGraph:
    left: tuple
    right: tuple
    edges: tuple  # (item, bin, weight), weight > 0 is not required here


@dataclass(frozen=True)
class Matching:
    pairs: tuple = ()
    weight: float = 0.0

    def bin_of(self, i):
        for a, b in self.pairs:
            if a == i:
                return b
        return None


def build_graph(instance: Instance) -> FeasibilityGraph:
    """Edge (i, j) of weight p_{i,j} for every option that fits alone in bin j."""
    fits = instance.fits_alone()
    edges = tuple((int(i), int(j), float(instance.profits[i, j]))
                  for i, j in zip(*np.nonzero(fits)))
    return FeasibilityGraph(tuple(range(instance.n)), tuple(range(instance.m)), edges)


class EdgeKeys:
    """Exact integer keys for a dense (n, m) matrix of positive edge weights.

    Zero entries mean "no edge".  Built once per graph/instance and reused
    for any item subset.
    """

    def __init__(self, weights: np.ndarray):
        weights = np.asarray(weights, dtype=float)
        self.weights = weights
        n, m = weights.shape
        self.n, self.m = n, m
        self._keys = None
        self._order = None

    @property
    def keys(self) -> list:
        # built on first use; single-bin subsets never need them
        if self._keys is None:
            self._keys = self._build()
        return self._keys

    def _build(self) -> list:
        weights, n, m = self.weights, self.n, self.m
        ratios = {}
        shift = 0
        for v in np.unique(weights[weights > 0]):
            num, den = float(v).as_integer_ratio()
            ratios[float(v)] = (num, den)
            shift = max(shift, den.bit_length() - 1)
        base = m + 2
        scale = base ** n
        keys = [[0] * m for _ in range(n)]
        rows, cols = np.nonzero(weights > 0)
        for i, j in zip(rows.tolist(), cols.tolist()):
            num, den = ratios[float(weights[i, j])]
            scaled = num << (shift - (den.bit_length() - 1))
            keys[i][j] = scaled * scale + (m - j) * base ** (n - 1 - i)
        return keys

    def _tops(self, rows, items) -> list:
        """For each bin in ``rows``, its ``len(rows)`` best-key items among ``items``."""
        if self._order is None:
            keys = self.keys
            self._order = [sorted((i for i in range(self.n) if keys[i][j] > 0),
                                  key=lambda i: keys[i][j], reverse=True)
                           for j in range(self.m)]
        member = bytearray(self.n)
        for i in items.tolist():
            member[i] = 1
        k = len(rows)
        tops = []
        for j in rows:
            top = []
            for i in self._order[j]:
                if member[i]:
                    top.append(i)
                    if len(top) == k:
                        break
            tops.append(top)
        return tops

    def solve(self, items) -> Matching:
        """Lexicographically smallest maximum-weight matching on ``items``."""
        items = np.asarray(items, dtype=int)
        if items.size == 0:
            return Matching()
        sub = self.weights[items]
        bins = np.flatnonzero((sub > 0).any(axis=0))
        if bins.size == 0:
            return Matching()
        if bins.size == 1:
            j = int(bins[0])
            col = sub[:, j]
            best = col.max()
            i = int(items[col == best].min())
            return Matching(((i, j),), float(best))
        rows = bins.tolist()
        if len(rows) <= SMALL_BINS:
            assign = _top_candidates_max(self.keys, rows, self._tops(rows, items))
        else:
            cols = np.sort(items[(sub > 0).any(axis=1)]).tolist()
            assign = _hungarian_max(self.keys, rows, cols)
        pairs = tuple(sorted((i, j) for j, i in assign.items()))
        w = self.weights
        return Matching(pairs, math.fsum([w[i, j] for i, j in pairs]))


def _top_candidates_max(keys, rows, tops) -> dict:
    """Max-key assignment for a handful of bins by enumerating candidates.

    ``tops[r]`` lists the ``len(rows)`` best-key items of bin ``rows[r]``.
    Some optimal assignment gives every bin one of those (otherwise one of
    them is free and swapping it in is better), and with distinct keys the
    optimum is unique, so this agrees with :func:`_hungarian_max`.
    """
    cands = [[None] + top for top in tops]
    best, out = 0, {}
    for combo in itertools.product(*cands):
        used = [i for i in combo if i is not None]
        if len(set(used)) != len(used):
            continue
        total = sum(keys[i][j] for i, j in zip(combo, rows) if i is not None)
        if total > best:
            best = total
            out = {j: i for i, j in zip(combo, rows) if i is not None}
    return out


def _hungarian_max(keys, rows, cols) -> dict:
    """Max-key assignment of every row to a distinct column or to nothing.

    Shortest augmenting path Hungarian method on costs ``-key`` with one
    zero-cost dummy column per row; ``rows`` are bins, ``cols`` items.
    Returns ``{bin: item}`` for the rows assigned to real columns.
    """
    nr, nc = len(rows), len(cols)
    total = nc + nr
    cost = [[0] * (total + 1) for _ in range(nr + 1)]
    big = 1
    for r, j in enumerate(rows, 1):
        row = cost[r]
        for c, i in enumerate(cols, 1):
            k = keys[i][j]
            row[c] = -k
            if k > big:
                big = k
    inf = big * (4 * total + 4) + 1
    u = [0] * (nr + 1)
    v = [0] * (total + 1)
    p = [0] * (total + 1)
    way = [0] * (total + 1)
    for r in range(1, nr + 1):
        p[0] = r
        j0 = 0
        minv = [inf] * (total + 1)
        used = [False] * (total + 1)
        while True:
            used[j0] = True
            i0 = p[j0]
            delta = inf
            j1 = 0
            crow = cost[i0]
            ui0 = u[i0]
            for j in range(1, total + 1):
                if not used[j]:
                    cur = crow[j] - ui0 - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(total + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
    out = {}
    for c in range(1, nc + 1):
        if p[c]:
            j, i = rows[p[c] - 1], cols[c - 1]
            if keys[i][j] > 0:
                out[j] = i
    return out


def max_weight_matching(graph: FeasibilityGraph) -> Matching:
    """Maximum-weight matching; zero-weight edges are ignored.

    Among optimal matchings the one with the lexicographically smallest
    sorted pair list is returned.
    """
    left = sorted(graph.left)
    right = sorted(graph.right)
    li = {v: k for k, v in enumerate(left)}
    rj = {v: k for k, v in enumerate(right)}
    weights = np.zeros((len(left), len(right)))
    for i, j, w in graph.edges:
        if w > 0:
            weights[li[i], rj[j]] = max(weights[li[i], rj[j]], w)
    m = EdgeKeys(weights).solve(range(len(left)))
    pairs = tuple((left[i], right[j]) for i, j in m.pairs)
    return Matching(pairs, m.weight)
