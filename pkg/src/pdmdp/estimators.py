"""scikit-learn style wrappers around the solvers.

``fit`` takes an MDP (an :class:`~pdmdp.mdp.MdpInstance`, an instance file
path, a parsed instance dict, or a ``(cost, trans, gamma)`` tuple) and stores
``value_``, ``policy_`` and ``n_iter_``. ``predict`` maps state indices to
actions and ``transform`` maps them to their optimal cost-to-go, so a fitted
solver can sit at the end of a pipeline that produces state indices.
"""

import os

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted, column_or_1d

from . import instance_io
from .mdp import MdpInstance, SolverConfig, bellman_residual, evaluate_policy, greedy_policy
from .policy_iteration import sequential_pi
from .primal_dual import solve_pd
from .variants import run_variant


def check_mdp(X):
    """Coerce the accepted MDP representations to an :class:`MdpInstance`."""
    if isinstance(X, MdpInstance):
        return X
    if isinstance(X, (str, os.PathLike)):
        return instance_io.load(X)
    if isinstance(X, dict):
        return instance_io.from_dict(X)
    if isinstance(X, tuple) and len(X) == 3:
        return MdpInstance(*X)
    raise TypeError(
        "expected an MdpInstance, a path, an instance dict or a (cost, trans, gamma) tuple, "
        f"got {type(X).__name__}"
    )


def check_states(X, n_states):
    """Validate a 1-d array of state indices in ``[0, n_states)``."""
    states = column_or_1d(np.asarray(X))
    if states.size and not np.issubdtype(states.dtype, np.integer):
        if not np.all(np.equal(np.mod(states, 1), 0)):
            raise ValueError("state indices must be integers")
        states = states.astype(int)
    states = states.astype(int, copy=False)
    if np.any(states < 0) or np.any(states >= n_states):
        raise ValueError(f"state indices must lie in [0, {n_states})")
    return states


class _MdpSolver(BaseEstimator):
    def _solve(self, inst):
        raise NotImplementedError

    def fit(self, X, y=None):
        inst = check_mdp(X)
        self.value_, self.policy_, self.n_iter_ = self._solve(inst)
        self.n_states_ = inst.n
        self.n_actions_ = inst.m
        return self

    def predict(self, X):
        """Optimal action for each state index in ``X``."""
        check_is_fitted(self, "policy_")
        return self.policy_[check_states(X, self.n_states_)]

    def transform(self, X):
        """Optimal discounted cost-to-go for each state index in ``X``."""
        check_is_fitted(self, "value_")
        return self.value_[check_states(X, self.n_states_)]

    def fit_predict(self, X, y=None):
        return self.fit(X).policy_

    def score(self, X, y=None):
        """Negative Bellman residual of the fitted value on MDP ``X`` (0 is optimal)."""
        check_is_fitted(self, "value_")
        return -bellman_residual(self.value_, check_mdp(X))


class PrimalDualSolver(_MdpSolver):
    """Primal-dual method with closed-form DRP directions; ``trace_`` holds the iteration log."""

    def __init__(self, tol=1e-8, feas_tol=1e-9, tie_tol=1e-9, max_iter=None, assert_lemmas=False):
        self.tol = tol
        self.feas_tol = feas_tol
        self.tie_tol = tie_tol
        self.max_iter = max_iter
        self.assert_lemmas = assert_lemmas

    def _solve(self, inst):
        config = SolverConfig(
            tol=self.tol,
            feas_tol=self.feas_tol,
            tie_tol=self.tie_tol,
            max_iter=self.max_iter,
            assert_lemmas=self.assert_lemmas,
        )
        self.trace_ = solve_pd(inst, config)
        return self.trace_.final_v, self.trace_.final_policy, self.trace_.iterations


class ValueIterationSolver(_MdpSolver):
    """Value iteration (``vi``), Gauss-Seidel (``gs``) or Gauss-Seidel-Jacobi (``gsj``)."""

    def __init__(self, variant="vi", tol=1e-8, max_sweeps=1000, mode="sweep"):
        self.variant = variant
        self.tol = tol
        self.max_sweeps = max_sweeps
        self.mode = mode

    def _solve(self, inst):
        result = run_variant(inst, self.variant, self.tol, self.max_sweeps, mode=self.mode)
        return result.v, greedy_policy(result.v, inst), result.sweeps


class PolicyIterationSolver(_MdpSolver):
    """Sequential-improvement policy iteration (one action swap per iteration)."""

    def __init__(self, rule="max_advantage", init=None):
        self.rule = rule
        self.init = init

    def _solve(self, inst):
        result = sequential_pi(inst, self.init, self.rule)
        return evaluate_policy(result.policy, inst), result.policy, result.iters
