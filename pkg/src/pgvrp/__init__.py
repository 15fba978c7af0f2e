"""Stochastic routing toolkit for clustered instances with probabilistic
cluster presence: exact evaluation, bounds, construction heuristics, a
branch-and-cut exact solver, and the LP/decomposition machinery they ride
on (two-phase simplex, L-shaped method, Dantzig-Wolfe)."""

from .model import (
    AprioriSolution,
    Cluster,
    FeasibilityReport,
    FormatError,
    FractionalPoint,
    Instance,
    Scenario,
    ValidationError,
    check_feasible,
    enumerate_scenarios,
    load_instance,
    load_solution,
    save_instance,
    save_solution,
    triangle_check,
)
from .evaluation import (
    alpha_coefficients,
    deterministic_length,
    deviation,
    expected_length,
    expected_recourse,
    realized_length,
    recourse_value,
)
from .oracle import (
    BudgetExceeded,
    EnumerationBudget,
    best_apriori_bruteforce,
    expected_length_enumerated,
    gvrp_optimal,
)
from .bounds import b_matrix, lower_bound_scaled, theta_cap, ub_clustered, ub_simple
from .heuristics import (
    clarke_wright,
    expected_insertion_value,
    solve_MmI,
    solve_mmI,
    solve_unbounded,
    sweep,
)
from .simplex import LinearProgram, LpSolution, SimplexError, SimplexOptions, solve
from .lshaped import TwoStageLP, extensive_form, lshape_solve, recourse_Q
from .dantzig_wolfe import Block, DecomposedLP, dw_lower_bound, dw_solve
from .exact import ExactResult, build_root, optimality_cut, separate_gsec, solve_exact
from .bench import DEFAULT_ROWS, SuiteSpec, generate, run_suite

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
