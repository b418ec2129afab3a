import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ropack.acceptance import brute_matching
from ropack.core import Instance
from ropack.matching import (
    SMALL_BINS,
    EdgeKeys,
    FeasibilityGraph,
    build_graph,
    max_weight_matching,
)


def graph_from_matrix(w):
    w = np.asarray(w, dtype=float)
    edges = tuple((i, j, float(w[i, j])) for i in range(w.shape[0])
                  for j in range(w.shape[1]) if w[i, j] > 0)
    return FeasibilityGraph(tuple(range(w.shape[0])), tuple(range(w.shape[1])), edges)


def brute_lex(w):
    """Best weight and lexicographically smallest optimal assignment vector."""
    n, m = w.shape
    best, best_vec = 0.0, None
    # unmatched = m, so sorting vectors lexicographically matches the tie-break
    for vec in itertools.product(range(m + 1), repeat=n):
        used = [j for j in vec if j < m]
        if len(set(used)) != len(used) or any(j < m and w[i, j] <= 0 for i, j in enumerate(vec)):
            continue
        val = math.fsum(w[i, j] for i, j in enumerate(vec) if j < m)
        if val > best or (val == best and (best_vec is None or vec < best_vec)):
            best, best_vec = val, vec
    pairs = tuple((i, j) for i, j in enumerate(best_vec or ()) if j < m)
    return best, pairs


def test_two_by_two_example():
    m = max_weight_matching(graph_from_matrix([[3, 1], [2, 4]]))
    assert m.weight == 7 and m.pairs == ((0, 0), (1, 1))


def test_empty_graph():
    m = max_weight_matching(FeasibilityGraph((0, 1), (0,), ()))
    assert m.pairs == () and m.weight == 0.0


def test_tie_prefers_smaller_item_then_smaller_bin():
    # every perfect matching weighs 2; lexicographic order picks (0,0),(1,1)
    m = max_weight_matching(graph_from_matrix([[1, 1], [1, 1]]))
    assert m.pairs == ((0, 0), (1, 1))
    # a single bin with two equal items takes the smaller index
    m = max_weight_matching(graph_from_matrix([[5], [5]]))
    assert m.pairs == ((0, 0),)


def test_unmatched_item_when_heavier_alternative():
    m = max_weight_matching(graph_from_matrix([[10, 0], [9, 0], [0, 1]]))
    assert m.pairs == ((0, 0), (2, 1)) and m.weight == 11


def test_build_graph_uses_fits_alone():
    inst = Instance(np.ones((2, 1)), [[[0.6], [1.2]], [[0.3], [0.9]]], [[2.0, 3.0], [1.0, 1.0]],
                    [[True, True], [True, False]])
    g = build_graph(inst)
    assert set(g.edges) == {(0, 0, 2.0), (1, 0, 1.0)}


def random_matrix(rng, n, m):
    w = rng.choice([0.0, 1.0, 2.0, 3.0, 0.5], size=(n, m))
    w[rng.random((n, m)) < 0.3] = 0.0
    return w


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_agrees_with_brute_force(seed):
    rng = np.random.default_rng(seed)
    w = random_matrix(rng, int(rng.integers(1, 6)), int(rng.integers(1, 6)))
    got = max_weight_matching(graph_from_matrix(w))
    assert got.weight == brute_matching(w)
    assert (got.weight, got.pairs) == brute_lex(w)


@pytest.mark.parametrize("m", [1, 2, SMALL_BINS, SMALL_BINS + 1, 6])
def test_small_and_hungarian_paths_agree_with_brute_force(m):
    rng = np.random.default_rng(m)
    for _ in range(40):
        w = random_matrix(rng, 5, m)
        got = max_weight_matching(graph_from_matrix(w))
        assert (got.weight, got.pairs) == brute_lex(w)


def test_subset_solve_matches_fresh_graph(rng):
    for _ in range(50):
        w = random_matrix(rng, 8, 4)
        keys = EdgeKeys(w)
        items = np.sort(rng.choice(8, size=int(rng.integers(1, 9)), replace=False))
        sub = keys.solve(items)
        fresh = max_weight_matching(graph_from_matrix(w[items]))
        assert sub.weight == fresh.weight
        assert sub.pairs == tuple((int(items[i]), j) for i, j in fresh.pairs)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(-4, 4))
def test_scale_invariance(seed, k):
    rng = np.random.default_rng(seed)
    w = random_matrix(rng, 5, 3)
    a = max_weight_matching(graph_from_matrix(w))
    b = max_weight_matching(graph_from_matrix(w * 2.0 ** k))
    assert a.pairs == b.pairs and b.weight == a.weight * 2.0 ** k


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_adding_an_edge_never_lowers_the_optimum(seed):
    rng = np.random.default_rng(seed)
    w = random_matrix(rng, 5, 4)
    i, j = int(rng.integers(5)), int(rng.integers(4))
    more = w.copy()
    more[i, j] = max(more[i, j], float(rng.integers(1, 5)))
    assert max_weight_matching(graph_from_matrix(more)).weight >= \
        max_weight_matching(graph_from_matrix(w)).weight


def test_tiny_weights_keep_exact_order():
    # weights differing only in the last bit must still be ranked correctly
    a = 1.0
    b = np.nextafter(1.0, 2.0)
    m = max_weight_matching(graph_from_matrix([[a], [b]]))
    assert m.pairs == ((1, 0),)
