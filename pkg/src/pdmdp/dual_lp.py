"""The linear-programming view of a discounted MDP.

The dual LP maximizes ``1^T v`` subject to ``v <= c(u) + gamma P(u) v`` for
every action. A primal-dual iteration needs the set of tight constraints at
the current ``v``, an improving direction ``vhat`` that is feasible for the
dual of the restricted primal (DRP), and the ratio test that gives the
longest feasible step along ``vhat``.
"""

from typing import NamedTuple

import numpy as np

from .errors import InfeasibleInput, UnboundedStep
from .mdp import check_value, constraint_slack


class StateActionPair(NamedTuple):
    state: int
    action: int


class StepResult(NamedTuple):
    theta: float
    argmin_pairs: tuple


def _pairs(mask):
    """Lexicographically ordered (state, action) pairs where an ``(m, n)`` mask is set."""
    actions, states = np.nonzero(mask)
    return tuple(sorted(StateActionPair(int(i), int(u)) for u, i in zip(actions, states)))


def direction_slope(vhat, inst):
    """Rate at which each constraint's slack shrinks along ``vhat``.

    Entry ``[u, i]`` is ``vhat_i - gamma * sum_j P_ij(u) vhat_j``.
    """
    vhat = check_value(vhat, inst)
    return vhat[None, :] - inst.gamma * (inst.trans @ vhat)


def tight_set(v, inst, tol=1e-9):
    """All pairs whose dual constraint holds with equality, up to ``tol``."""
    slack = constraint_slack(v, inst)
    if slack.min() < -tol:
        u, i = np.unravel_index(np.argmin(slack), slack.shape)
        raise InfeasibleInput(
            f"constraint (state {i}, action {u}) is violated by {-slack[u, i]!r}"
        )
    return _pairs(np.abs(slack) <= tol)


def drp_feasible(vhat, J, inst, tol=1e-9):
    """Feasibility of ``vhat`` for the DRP restricted to the tight set ``J``."""
    vhat = check_value(vhat, inst)
    if np.any(vhat > 1.0 + tol):
        return False
    if not J:
        return True
    slope = direction_slope(vhat, inst)
    states = [p.state for p in J]
    actions = [p.action for p in J]
    return bool(np.all(slope[actions, states] <= tol))


def step_size(v, vhat, inst, tie_tol=1e-9, *, slope_tol=0.0, feas_tol=1e-9, exclude=()):
    """Ratio test for the update ``v + theta * vhat``.

    Constraints with slope above ``slope_tol`` form the candidate set; pairs in
    ``exclude`` are dropped from it (the solver passes pairs whose slope is
    zero by construction, so rounding cannot promote them). All candidates
    within ``tie_tol * (1 + |theta|)`` of the minimum ratio are reported.
    """
    slack = constraint_slack(v, inst)
    if slack.min() < -feas_tol:
        raise InfeasibleInput(f"v violates a dual constraint by {-slack.min()!r}")
    slope = direction_slope(vhat, inst)
    candidates = slope > slope_tol
    for p in exclude:
        candidates[p.action, p.state] = False
    if not candidates.any():
        raise UnboundedStep("no constraint has positive slope along the direction")
    ratios = np.full(slope.shape, np.inf)
    ratios[candidates] = np.maximum(slack[candidates], 0.0) / slope[candidates]
    theta = float(ratios.min())
    ties = candidates & (ratios <= theta + tie_tol * (1.0 + abs(theta)))
    return StepResult(theta, _pairs(ties))
