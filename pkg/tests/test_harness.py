import json
import math

import numpy as np
import pytest

from ropack import harness
from ropack.core import Instance, StructuralError, profit_of
from ropack.hardgen import RandomSpec, gen_random
from ropack.harness import (
    SCHEMA,
    InvariantViolation,
    reference_opt,
    report_guarantee,
    run_trial,
    run_trials,
    summarize,
    trial_rng,
)
from ropack.online import PhaseParams, default_params, run_vgap


@pytest.mark.parametrize("d, variant, value", [
    (1, "general", 6.99),
    (2, "general", 12.840254166877415),
    (3, "general", math.e ** 0.25 * 14),
    (1, "zero_one", 2 * math.sqrt(math.e) * 3),
    (4, "zero_one", 13.189770),
    (1, "vmkp", 5.29),
    (2, "vmkp", 10.0),
])
def test_report_guarantee(d, variant, value):
    assert report_guarantee(d, variant) == pytest.approx(value, rel=1e-6)


def test_guarantee_errors():
    with pytest.raises(StructuralError):
        report_guarantee(0)
    with pytest.raises(StructuralError):
        report_guarantee(1, "other")


def test_trial_streams_are_independent_and_reproducible():
    a = trial_rng(5, 0).random(4)
    assert np.array_equal(a, trial_rng(5, 0).random(4))
    assert not np.array_equal(a, trial_rng(5, 1).random(4))
    assert not np.array_equal(a, trial_rng(6, 0).random(4))


def test_run_trial_uses_permutation_then_coins(three_items):
    profit, problems, trace = run_trial(three_items, "vgap", default_params(1), 11, 3)
    rng = trial_rng(11, 3)
    perm = rng.permutation(3)
    packing, ref = run_vgap(three_items, perm, rng)
    assert trace.to_jsonl() == ref.to_jsonl()
    assert profit == profit_of(three_items, packing) and problems == []


def test_summarize():
    mean, std, se = summarize([1.0, 2.0, 3.0, 4.0])
    assert mean == 2.5 and std == pytest.approx(math.sqrt(5 / 3)) and se == pytest.approx(std / 2)
    assert summarize([3.0]) == (3.0, 0.0, 0.0)


def test_single_trial_report(three_items):
    rep = run_trials(three_items, "vgap", trials=1, seed=0)
    assert rep.trials == 1 and rep.std == 0.0 and rep.ci99 == (rep.mean, rep.mean)
    assert rep.opt == 1.1 and rep.opt_exact and rep.opt_method == "branch_and_bound"


@pytest.fixture(scope="module")
def small_general():
    return gen_random(RandomSpec(12, 2, 2), np.random.default_rng(17))


def test_jobs_do_not_change_the_report(small_general):
    one = run_trials(small_general, "vgap", trials=200, seed=4, jobs=1)
    many = run_trials(small_general, "vgap", trials=200, seed=4, jobs=8)
    assert one.dumps() == many.dumps()


def test_report_schema(small_general):
    rep = run_trials(small_general, "vgap", trials=50, seed=1, instance_id="demo")
    data = json.loads(rep.dumps())
    assert data["schema"] == SCHEMA and data["instance_id"] == "demo"
    assert set(data) >= {"algorithm", "params", "trials", "seed", "profits", "mean", "std",
                         "stderr", "ci99", "opt", "opt_exact", "ratio", "inverse_ratio",
                         "guarantee", "within_guarantee"}
    assert len(data["profits"]) == 50
    assert data["params"] == {"q1": pytest.approx(0.8 / math.e ** 0.25), "q2": 0.8}
    assert data["ratio"] == pytest.approx(data["opt"] / data["mean"])
    lo, hi = data["ci99"]
    assert lo <= data["mean"] <= hi


def test_custom_params_and_given_opt(small_general):
    rep = run_trials(small_general, "vgap", PhaseParams(0.0, 0.0), trials=20, opt=10.0)
    assert rep.params == {"q1": 0.0, "q2": 0.0}
    assert rep.opt == 10.0 and rep.opt_method == "given"


def test_violation_raises(monkeypatch, three_items):
    def fake(instance, packing, trace):
        return ["made up problem"] if trace.rounds[-1].l == 3 else []
    monkeypatch.setattr(harness, "check_trace", fake)
    with pytest.raises(InvariantViolation) as info:
        run_trials(three_items, "vgap", trials=5, seed=0)
    assert info.value.trial == 0 and info.value.problems == ["made up problem"]


def test_trace_dir(tmp_path, three_items):
    run_trials(three_items, "vgap", trials=3, seed=2, trace_dir=str(tmp_path / "tr"))
    files = sorted(p.name for p in (tmp_path / "tr").iterdir())
    assert files == ["trial_000000.jsonl", "trial_000001.jsonl", "trial_000002.jsonl"]
    lines = (tmp_path / "tr" / "trial_000001.jsonl").read_text().splitlines()
    assert len(lines) == 3
    assert set(json.loads(lines[0])) == {"l", "phase", "i", "j", "commit", "R", "cons"}


def test_lp_fallback_when_budget_runs_out():
    inst = Instance.vmkp(3, np.full((14, 1), 0.3), np.arange(1.0, 15.0))
    res = reference_opt(inst, node_budget=5)
    assert not res.exact and res.method == "lp_bound_only"
    assert res.value == pytest.approx(math.fsum(range(5, 15)), abs=1e-6)
    rep = run_trials(inst, "vmkp", trials=5, opt=res)
    assert not rep.opt_exact and rep.opt_method == "lp_bound_only"


def test_input_checks(three_items):
    with pytest.raises(StructuralError):
        run_trials(three_items, "vgap", trials=0)
    with pytest.raises(StructuralError):
        run_trials(three_items, "greedy")
    with pytest.raises(StructuralError):
        run_trials(three_items, "vmkp")
