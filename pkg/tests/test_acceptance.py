"""Acceptance criteria at full scale.

Each test prints one ``criterion N [PASS|FAIL] ...`` line with the measured
numbers.  They take several minutes in total; deselect with ``-m "not slow"``.
"""

import pytest

from ropack import acceptance as acc

pytestmark = pytest.mark.slow


def _report(capsys, res):
    with capsys.disabled():
        print("\n" + res.line())
    assert res.passed, res.line()


def test_criterion_1_oracle_exactness(capsys):
    res = acc.criterion_oracle_exactness(1000)
    _report(capsys, res)
    assert res.detail["mismatches"] == 0 and res.detail["within_time"]


def test_criterion_2_lp_dominance(capsys):
    res = acc.criterion_lp_dominance(1000)
    _report(capsys, res)
    assert res.detail["bound_below_opt"] == 0
    assert res.detail["max_constraint_violation"] <= 1e-9


def test_criterion_3_matching(capsys):
    res = acc.criterion_matching(1000)
    _report(capsys, res)
    assert res.detail["mismatches"] == 0


def test_criterion_4_feasibility(capsys):
    res = acc.criterion_feasibility(100_000)
    _report(capsys, res)
    assert res.detail["runs"] >= 100_000 and res.detail["violations"] == 0
    assert min(res.detail[a] for a in ("vgap", "zvgap", "vmkp")) > 0


def test_criterion_5_first_fit(capsys):
    res = acc.criterion_first_fit(10_000)
    _report(capsys, res)
    assert res.detail["runs"] >= 10_000 and res.detail["violations"] == 0
    assert res.detail["blocked_rounds"] > 0


@pytest.mark.parametrize("check, bound", [
    (acc.criterion_ratio_gap, 6.99),
    (acc.criterion_ratio_vgap, 12.84),
    (acc.criterion_ratio_vmkp, 5.29),
])
def test_criterion_6_ratio_direction(capsys, check, bound):
    res = check(20, 10_000)
    _report(capsys, res)
    assert res.detail["guarantee"] == pytest.approx(bound, abs=5e-3)
    assert res.detail["failures"] == 0 and res.detail["within_time"]
    assert res.seconds < 300


def test_criterion_7_lower_bound(capsys):
    res = acc.criterion_lower_bound(10_000)
    _report(capsys, res)
    for d in (2, 3):
        assert res.detail[f"d{d}_structure_violations"] == 0
        assert res.detail[f"d{d}_matrices_with_opt_not_d"] == 0
        assert res.detail[f"d{d}_mean_profit"] <= res.detail[f"d{d}_profit_bound"]
        assert res.detail[f"d{d}_opt_d_fraction"] >= res.detail[f"d{d}_fraction_bound"]
    assert res.seconds < 600


def test_criterion_8_determinism(capsys):
    res = acc.criterion_determinism()
    _report(capsys, res)
    assert res.detail["identical"] == res.detail["cases"]
