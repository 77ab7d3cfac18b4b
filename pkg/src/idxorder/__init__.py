"""Solvers for the index deployment ordering problem.

Given indexes with build costs, queries with runtimes, query plans with
speedups, build interactions, and precedences, find a deployment order
minimizing the area under the improvement curve.
"""

from .analyze import (
    AnalysisReport,
    ConstraintSet,
    analyze,
    build_constraint_set,
    constraint_set_from_sidecar,
    detect_alliances,
    detect_colonized,
    detect_disjoint_order,
    detect_dominated,
    tail_analysis,
)
from .evaluate import (
    EvalResult,
    PrefixState,
    build_cost,
    evaluate,
    extend,
    is_feasible_order,
    runtime_after,
    swap_delta,
)
from .exact import SearchLimits, SearchOutcome, SearchStats, brute_force, propagate, solve_exact
from .generate import GenProfile, generate, generate_property_fixture, tpcds_like, tpch_like
from .heuristics import dp_schedule, edge_weights, greedy, min_cut_split
from .localsearch import (
    LnsParams,
    TabuParams,
    VnsParams,
    adapt_neighborhood,
    lns,
    tabu_bswap,
    tabu_fswap,
    vns,
)
from .model import (
    BuildInteraction,
    IndexDef,
    Instance,
    InstanceFormatError,
    InvalidInstanceError,
    PlanDef,
    Precedence,
    QueryDef,
    Violation,
    canonicalize,
    load,
    make_instance,
    store,
    validate,
)

__version__ = "0.1.0"
