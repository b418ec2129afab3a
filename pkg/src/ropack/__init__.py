"""Random-order online packing: VGAP, {0,1}-VGAP and vector multiple knapsack."""

from .core import (
    Instance,
    Packing,
    PackingOption,
    StructuralError,
    classify_dense,
    classify_heavy,
    from_json,
    is_feasible,
    load_instance,
    profit_of,
    project,
    save_instance,
    split,
    to_json,
)
from .hardgen import RandomSpec, gen_lower_bound, gen_random, verify_structure
from .harness import TrialReport, report_guarantee, run_trials
from .lp import FractionalSolution, greedy_fractional, sample_tentative, solve_relaxation
from .matching import FeasibilityGraph, Matching, build_graph, max_weight_matching
from .online import (
    PhaseParams,
    RunTrace,
    default_params,
    first_fit,
    run_01_vgap,
    run_vgap,
    run_vmkp,
)
from .oracle import OptResult, lp_upper_bound, opt_branch_bound, opt_enumerate

__version__ = "0.1.0"
