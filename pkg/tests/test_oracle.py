import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ropack.acceptance import small_instance
from ropack.core import Instance, StructuralError, is_feasible, profit_of, split
from ropack.hardgen import gen_lower_bound
from ropack.oracle import (
    SizeGuardError,
    lp_upper_bound,
    opt_branch_bound,
    opt_enumerate,
    solve_opt,
)

from .conftest import one_bin


def test_three_item_optimum(three_items):
    for res in (opt_enumerate(three_items), opt_branch_bound(three_items)):
        assert res.value == 1.1 and res.exact
        assert res.packing.pairs() == [(1, 0), (2, 0)]


def test_empty_and_profitless():
    assert opt_enumerate(one_bin([])).value == 0.0
    res = opt_branch_bound(one_bin([(0.1, 0.0), (0.2, 0.0)]))
    assert res.value == 0.0 and res.packing.pairs() == []


def test_lp_integral_case():
    # items fit together, so the LP optimum is integral and equals OPT
    inst = Instance.vmkp(2, [[0.5], [0.5], [0.5], [0.5]], [1.0, 2.0, 3.0, 4.0])
    assert opt_branch_bound(inst).value == 10.0
    assert lp_upper_bound(inst) == pytest.approx(10.0)


def test_tie_break_is_lexicographic():
    # the two items are interchangeable; the smaller assignment vector wins
    inst = Instance.vmkp(2, [[0.7], [0.7]], [1.0, 1.0])
    for res in (opt_enumerate(inst), opt_branch_bound(inst)):
        assert res.packing.pairs() == [(0, 0), (1, 1)]


def test_lower_bound_all_ones_optimum():
    lb = gen_lower_bound(2, 1, None, profits=np.ones(32))
    res = opt_branch_bound(lb.instance)
    assert res.exact and res.value == 2.0
    items = sorted(i for i, _ in res.packing.pairs())
    assert lb.matrix_of(items[0]) == lb.matrix_of(items[1])


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_branch_bound_equals_enumeration(seed):
    inst = small_instance(np.random.default_rng(seed), n_max=7, m_max=3)
    a, b = opt_enumerate(inst), opt_branch_bound(inst)
    assert a.value == b.value
    assert a.packing.pairs() == b.packing.pairs()
    assert is_feasible(inst, b.packing) and profit_of(inst, b.packing) == b.value


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_opt_bounds(seed):
    inst = small_instance(np.random.default_rng(seed), n_max=8, m_max=3)
    opt = opt_branch_bound(inst).value
    assert opt <= lp_upper_bound(inst) + 1e-7 * max(1.0, opt)
    heavy, light = split(inst)
    # OPT splits into a heavy and a light part
    assert opt <= opt_branch_bound(heavy).value + opt_branch_bound(light).value + 1e-9


def test_size_guard():
    inst = one_bin([(0.1, 1.0)] * 30)
    with pytest.raises(SizeGuardError):
        opt_enumerate(inst)
    with pytest.raises(SizeGuardError):
        opt_enumerate(one_bin([(0.1, 1.0)] * 4), limit=15)
    assert opt_enumerate(one_bin([(0.1, 1.0)] * 4), limit=16).value == 4.0


def test_node_budget_flags_inexact():
    rng = np.random.default_rng(5)
    inst = Instance.vmkp(3, rng.uniform(0.2, 0.6, size=(14, 1)), rng.uniform(1, 2, size=14))
    res = opt_branch_bound(inst, node_budget=20)
    assert not res.exact and res.node_count == 20
    assert is_feasible(inst, res.packing)
    assert opt_branch_bound(inst).value >= res.value


def test_solve_opt_dispatch(three_items):
    assert solve_opt(three_items, "enum").value == 1.1
    lp = solve_opt(three_items, "lp")
    assert lp.value == pytest.approx(1.2) and not lp.exact and lp.packing is None
    assert lp.to_json()["packing"] == []
    assert solve_opt(three_items).to_json()["packing"] == [[2, 1], [3, 1]]
    with pytest.raises(StructuralError):
        solve_opt(three_items, "magic")
