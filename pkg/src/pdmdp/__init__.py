"""Primal-dual and value/policy-iteration solvers for discounted-cost MDPs."""

from .dual_lp import StateActionPair, StepResult, drp_feasible, step_size, tight_set
from .errors import PdMdpError
from .estimators import PolicyIterationSolver, PrimalDualSolver, ValueIterationSolver, check_mdp
from .instance_io import GeneratorSpec, fixture_path, load, random_mdp, save
from .mdp import (
    MdpInstance,
    SolverConfig,
    bellman_backup,
    bellman_residual,
    evaluate_policy,
    greedy_policy,
    is_dual_feasible,
)
from .policy_iteration import (
    bound_report,
    decompose_pd_trace,
    extract_first_passage,
    scherrer_bound,
    sequential_pi,
)
from .primal_dual import ActiveSet, PdTrace, optimal_drp_direction, solve_pd, update_active_set
from .variants import run_variant

__version__ = "0.1.0"

__all__ = [
    "ActiveSet",
    "GeneratorSpec",
    "MdpInstance",
    "PdMdpError",
    "PdTrace",
    "PolicyIterationSolver",
    "PrimalDualSolver",
    "SolverConfig",
    "StateActionPair",
    "StepResult",
    "ValueIterationSolver",
    "bellman_backup",
    "bellman_residual",
    "bound_report",
    "check_mdp",
    "decompose_pd_trace",
    "drp_feasible",
    "evaluate_policy",
    "extract_first_passage",
    "fixture_path",
    "greedy_policy",
    "is_dual_feasible",
    "load",
    "optimal_drp_direction",
    "random_mdp",
    "run_variant",
    "save",
    "scherrer_bound",
    "sequential_pi",
    "solve_pd",
    "step_size",
    "tight_set",
    "update_active_set",
]
