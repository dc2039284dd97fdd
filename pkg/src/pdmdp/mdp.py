"""Finite discounted-cost MDPs: data model, Bellman operators, policy evaluation.

Value functions are length-``n`` float arrays and policies are length-``n``
integer arrays of action indices. States and actions are 0-based.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInstance, ValidationError
from .numerics import solve_linear

STOCHASTIC_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class MdpInstance:
    """An ``n``-state, ``m``-action MDP with discount ``gamma``.

    ``cost[u, i]`` is the per-step cost of action ``u`` in state ``i`` and
    ``trans[u, i, j]`` the probability of moving from ``i`` to ``j`` under
    ``u``. Arrays are copied and frozen on construction.
    """

    cost: np.ndarray
    trans: np.ndarray
    gamma: float
    stochastic_tol: float = field(default=STOCHASTIC_TOL, repr=False)

    def __post_init__(self):
        cost = np.array(self.cost, dtype=float)
        trans = np.array(self.trans, dtype=float)
        gamma = float(self.gamma)
        if cost.ndim != 2:
            raise InvalidInstance(f"cost must be an (m, n) array, got shape {cost.shape}")
        m, n = cost.shape
        if m < 1 or n < 1:
            raise InvalidInstance("an MDP needs at least one state and one action")
        if trans.shape != (m, n, n):
            raise InvalidInstance(f"trans must have shape {(m, n, n)}, got {trans.shape}")
        if not 0.0 <= gamma < 1.0:
            raise InvalidInstance(f"gamma must lie in [0, 1), got {gamma!r}")
        if not np.all(np.isfinite(cost)):
            raise InvalidInstance("cost entries must be finite")
        if not np.all(np.isfinite(trans)) or np.any(trans < 0):
            u, i = np.argwhere(~(trans >= 0).all(axis=2))[0]
            raise ValidationError(
                f"transition row (action {u}, state {i}) has negative or non-finite entries",
                row=(int(u), int(i)),
            )
        sums = trans.sum(axis=2)
        bad = np.abs(sums - 1.0) > self.stochastic_tol
        if bad.any():
            u, i = np.argwhere(bad)[0]
            raise ValidationError(
                f"transition row (action {u}, state {i}) sums to {sums[u, i]!r}, not 1",
                row=(int(u), int(i)),
                row_sum=float(sums[u, i]),
            )
        cost.setflags(write=False)
        trans.setflags(write=False)
        object.__setattr__(self, "cost", cost)
        object.__setattr__(self, "trans", trans)
        object.__setattr__(self, "gamma", gamma)

    @property
    def n(self):
        return self.cost.shape[1]

    @property
    def m(self):
        return self.cost.shape[0]

    def __eq__(self, other):
        if not isinstance(other, MdpInstance):
            return NotImplemented
        return (
            self.gamma == other.gamma
            and np.array_equal(self.cost, other.cost)
            and np.array_equal(self.trans, other.trans)
        )

    __hash__ = None

    def with_gamma(self, gamma):
        return MdpInstance(self.cost, self.trans, gamma, stochastic_tol=self.stochastic_tol)


@dataclass(frozen=True)
class SolverConfig:
    """Tolerances and guards shared by the solvers.

    ``feas_tol`` is the absolute slack tolerance for feasibility and
    tightness, ``tie_tol`` the relative tolerance when collecting tied
    step-size minimizers, and ``slope_tol`` the threshold above which a
    constraint counts as limiting the step. ``tol`` bounds the Bellman
    residual of a returned solution. ``max_iter=None`` means ``n * m**n``
    capped at one million.
    """

    tol: float = 1e-8
    feas_tol: float = 1e-9
    tie_tol: float = 1e-9
    slope_tol: float = 1e-12
    max_iter: int | None = None
    assert_lemmas: bool = False

    def iteration_cap(self, n, m):
        if self.max_iter is not None:
            return self.max_iter
        return min(n * m**n, 10**6)


def check_value(v, inst):
    v = np.asarray(v, dtype=float)
    if v.shape != (inst.n,):
        raise ValueError(f"value vector must have shape ({inst.n},), got {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("value vector has non-finite entries")
    return v


def check_policy(mu, inst):
    mu = np.asarray(mu)
    if mu.shape != (inst.n,) or not np.issubdtype(mu.dtype, np.integer):
        raise ValueError(f"policy must be an integer array of shape ({inst.n},)")
    if np.any(mu < 0) or np.any(mu >= inst.m):
        raise ValueError(f"policy actions must lie in [0, {inst.m})")
    return mu


def q_values(v, inst):
    """Return the ``(m, n)`` array ``c_i(u) + gamma * sum_j P_ij(u) v_j``."""
    v = check_value(v, inst)
    return inst.cost + inst.gamma * (inst.trans @ v)


def constraint_slack(v, inst):
    """Slack ``c_i(u) + gamma P_i(u) v - v_i`` of every dual constraint, shape ``(m, n)``."""
    v = check_value(v, inst)
    return q_values(v, inst) - v[None, :]


def bellman_backup(v, inst):
    return q_values(v, inst).min(axis=0)


def greedy_policy(v, inst, tol=0.0):
    """Minimizing action per state, lowest index among actions within ``tol`` of the minimum."""
    q = q_values(v, inst)
    best = q.min(axis=0)
    return np.argmax(q <= best + tol, axis=0)


def policy_matrices(mu, inst):
    """Return ``(P(mu), c(mu))``."""
    mu = check_policy(mu, inst)
    states = np.arange(inst.n)
    return inst.trans[mu, states], inst.cost[mu, states]


def evaluate_policy(mu, inst):
    """Discounted cost of a stationary policy: solve ``(I - gamma P(mu)) v = c(mu)``."""
    P, c = policy_matrices(mu, inst)
    return solve_linear(np.eye(inst.n) - inst.gamma * P, c)


def is_dual_feasible(v, inst, tol=1e-9):
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    return bool(constraint_slack(v, inst).min() >= -tol)


def bellman_residual(v, inst):
    v = check_value(v, inst)
    return float(np.max(np.abs(v - bellman_backup(v, inst))))


def initial_feasible_value(inst):
    """A dual feasible starting point: zero for nonnegative costs, else a constant shift.

    The constant vector ``alpha * 1`` is feasible iff ``alpha (1 - gamma) <= min cost``.
    """
    low = inst.cost.min()
    if low >= 0:
        return np.zeros(inst.n)
    return np.full(inst.n, low / (1.0 - inst.gamma))
