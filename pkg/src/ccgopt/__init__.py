"""Combinatorial congestion games over ZDDs: differentiable equilibrium
computation and leader-side parameter optimization."""

__version__ = "0.1.0"

from .congestion import CostModel, check_theta, potential_gradient, social_cost
from .equilibrium import (
    EquilibriumTrace,
    Population,
    SolverConfig,
    exponential_weights_check,
    fw_gap,
    solve_accelerated,
    solve_asymmetric,
    solve_naive_softmin,
    solve_standard_fw,
)
from .graphs import Graph, StrategyClass, bfs_edge_order, load_graph, parse_graph
from .marginals import (
    brute_force_marginal,
    marginal_values,
    sample_strategies,
    sample_strategy,
    softmin_marginal,
)
from .stackelberg import (
    OptimizationTrace,
    StackelbergConfig,
    baseline_heuristic,
    evaluate_leader,
    exhaustive_search,
    optimize_pgd,
    outer_gradient,
    project_theta,
    project_theta_reference,
)
from .tape import Tape, Var, values
from .zdd import Zdd, build_family, load_zdd, parse_zdd
