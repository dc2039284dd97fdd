"""Sequential policy iteration and the first-passage view of the primal-dual trace.

Between two iterations that cover a new state, the primal-dual solver only
exchanges actions inside the covered set ``G``. Those exchanges are policy
improvement steps on a first-passage subproblem over ``G``: moves inside
``G`` are free, and leaving ``G`` costs ``gamma`` and ends the process. Its
value under the active actions is exactly the primal-dual direction
restricted to ``G``.
"""

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from . import oracles
from .errors import DecompositionMismatch, InvalidStateSet
from .mdp import check_policy, evaluate_policy, q_values
from .numerics import check_substochastic, solve_linear
from .primal_dual import ActiveSet, update_active_set

RULES = ("max_advantage", "first_improving")


@dataclass(frozen=True)
class PiResult:
    """``history`` holds the value vector of every policy visited, in order."""

    v: np.ndarray
    policy: np.ndarray
    iters: int
    history: tuple = ()


def _pick_improvement(advantage, threshold, rule):
    """Return ``(state, action)`` of an improving swap, or ``None``."""
    if rule == "max_advantage":
        u, i = np.unravel_index(np.argmax(advantage), advantage.shape)
        return (int(i), int(u)) if advantage[u, i] > threshold else None
    improving = np.argwhere((advantage > threshold).T)
    return tuple(int(x) for x in improving[0]) if len(improving) else None


def _sequential_pi(trans, cost, gamma, policy, rule, tol):
    """Sequential-improvement PI on a (sub)stochastic model, one action swap per iteration."""
    m, n = cost.shape
    states = np.arange(n)
    policy = np.array(policy, dtype=int)
    iters = 0
    history = []
    while True:
        v = solve_linear(np.eye(n) - gamma * trans[policy, states], cost[policy, states])
        history.append(v)
        advantage = v[None, :] - (cost + gamma * (trans @ v))
        swap = _pick_improvement(advantage, tol * (1.0 + np.abs(v).max()), rule)
        if swap is None:
            return PiResult(v, policy, iters, tuple(history))
        i, u = swap
        policy[i] = u
        iters += 1


def sequential_pi(inst, init=None, rule="max_advantage", tol=1e-12):
    """Policy iteration that changes a single state's action per iteration.

    ``max_advantage`` swaps the pair maximizing ``v_i - (c_i(u) + gamma P_i(u) v)``;
    ``first_improving`` swaps the lexicographically first improving pair.
    ``iters`` counts swaps.
    """
    if rule not in RULES:
        raise ValueError(f"unknown rule {rule!r}; expected one of {RULES}")
    init = np.zeros(inst.n, dtype=int) if init is None else check_policy(init, inst)
    return _sequential_pi(inst.trans, inst.cost, inst.gamma, init, rule, tol)


@dataclass(frozen=True, eq=False)
class FirstPassageInstance:
    """Discounted first-passage problem on the covered states ``states``.

    ``trans_inside[u, k, l]`` is the probability of moving from ``states[k]``
    to ``states[l]`` under action ``u``; the remaining ``exit_mass[u, k]``
    leaves the set at cost ``gamma``.
    """

    states: tuple
    trans_inside: np.ndarray
    exit_mass: np.ndarray
    gamma: float
    parent: object

    @property
    def exit_cost(self):
        """Expected one-step cost ``gamma * exit_mass``."""
        return self.gamma * self.exit_mass

    def policy_of(self, active):
        """Action per position of ``states`` taken from an active set covering exactly them."""
        lookup = {p.state: p.action for p in active.pairs}
        if set(lookup) != set(self.states):
            raise InvalidStateSet("active set does not cover the subproblem states")
        return np.array([lookup[s] for s in self.states], dtype=int)

    def evaluate(self, policy):
        """Value vector (ordered like ``states``) of an action assignment."""
        k = np.arange(len(self.states))
        P = self.trans_inside[policy, k]
        return solve_linear(np.eye(len(k)) - self.gamma * P, self.exit_cost[policy, k])

    def advantage(self, value):
        """``value_k - Q(k, u)`` for every action, shape ``(m, |G|)``."""
        q = self.exit_cost + self.gamma * (self.trans_inside @ value)
        return value[None, :] - q

    def solve(self, init=None, rule="max_advantage", tol=1e-12):
        init = np.zeros(len(self.states), dtype=int) if init is None else init
        return _sequential_pi(self.trans_inside, self.exit_cost, self.gamma, init, rule, tol)

    def brute_force_optimum(self):
        """Componentwise-minimal value over all action assignments."""
        best = np.full(len(self.states), np.inf)
        for _, values in oracles.all_policy_values(self.trans_inside, self.exit_cost, self.gamma):
            best = np.minimum(best, values.min(axis=0))
        return best


def extract_first_passage(inst, G):
    states = tuple(sorted(int(s) for s in G))
    if not states:
        raise InvalidStateSet("the covered set must be nonempty")
    if len(set(states)) != len(states) or states[0] < 0 or states[-1] >= inst.n:
        raise InvalidStateSet(f"invalid state set {G!r} for {inst.n} states")
    idx = np.array(states)
    inside = inst.trans[:, idx][:, :, idx]
    for u in range(inst.m):
        check_substochastic(inside[u])
    exit_mass = np.clip(1.0 - inside.sum(axis=2), 0.0, 1.0)
    inside.setflags(write=False)
    exit_mass.setflags(write=False)
    return FirstPassageInstance(states, inside, exit_mass, inst.gamma, inst)


def scherrer_bound(n, m, gamma):
    """``n^2 (m-1) (1 + 2/(1-gamma) ln(1/(1-gamma)))``, natural logarithm.

    Reported for comparison only; it is not known to bound the primal-dual
    entering rule.
    """
    if n < 1 or m < 1 or not 0.0 <= gamma < 1.0:
        raise ValueError("need n, m >= 1 and gamma in [0, 1)")
    return n * n * (m - 1) * (1.0 + 2.0 / (1.0 - gamma) * math.log(1.0 / (1.0 - gamma)))


def naive_cap(n, m):
    """``sum_{k=1..n} m**k``: distinct action assignments over growing covered sets."""
    return sum(m**k for k in range(1, n + 1))


@dataclass
class TraceDecomposition:
    """Blocks of a primal-dual trace, each ending with the iteration that covers a new state.

    ``ends[b]`` is the active set just before block ``b`` covers its new state.
    ``premature`` lists blocks that covered a new state while an improving
    exchange on the current first-passage subproblem still existed.
    """

    blocks: list
    premature: list
    ends: list


def decompose_pd_trace(trace, inst, tol=1e-9, improve_tol=1e-10):
    """Split a trace into blocks and check every exchange is a policy improvement.

    Exchanges are checked on the first-passage subproblem over the covered
    set: the new assignment's value must be componentwise no larger than the
    old one (within ``tol``) and strictly smaller somewhere.
    """
    active = ActiveSet()
    blocks, premature, ends = [], [], []
    length = 0
    for ev in trace.events:
        length += 1
        new_active, exited = update_active_set(active, ev.entering)
        if exited != ev.exited or len(new_active) != ev.g_size:
            raise DecompositionMismatch("replayed active set disagrees with the trace", ev.iter)
        if exited is None:
            if active.pairs:
                fp = extract_first_passage(inst, active.covered)
                value = fp.evaluate(fp.policy_of(active))
                if fp.advantage(value).max() > improve_tol:
                    premature.append(len(blocks))
            ends.append(active)
            blocks.append(length)
            length = 0
        else:
            fp = extract_first_passage(inst, active.covered)
            before = fp.evaluate(fp.policy_of(active))
            after = fp.evaluate(fp.policy_of(new_active))
            if np.any(after > before + tol) or not np.max(before - after) > 0:
                raise DecompositionMismatch(
                    f"exchange {exited} -> {ev.entering} does not improve the subproblem "
                    f"(before {before}, after {after})",
                    ev.iter,
                )
        active = new_active
    if length:
        raise DecompositionMismatch("trace ends inside a block", trace.events[-1].iter)
    if len(active) != inst.n:
        raise DecompositionMismatch("trace does not cover every state", trace.iterations)
    return TraceDecomposition(blocks, premature, ends)


@dataclass
class BoundReport:
    n: int
    m: int
    gamma: float
    scherrer_bound: float
    naive_cap: int
    measured_pd_iters: int
    per_block_pi_iters: list

    def to_json(self):
        return json.dumps(asdict(self))


def bound_report(inst, trace):
    decomposition = decompose_pd_trace(trace, inst)
    return BoundReport(
        n=inst.n,
        m=inst.m,
        gamma=inst.gamma,
        scherrer_bound=scherrer_bound(inst.n, inst.m, inst.gamma),
        naive_cap=naive_cap(inst.n, inst.m),
        measured_pd_iters=trace.iterations,
        per_block_pi_iters=decomposition.blocks,
    )


def pi_value_oracle(inst):
    """Optimal value by sequential PI from the all-zeros policy (verification oracle)."""
    result = sequential_pi(inst)
    return evaluate_policy(result.policy, inst), result.policy


def tied_states(v, inst, tol=1e-9):
    """States where more than one action attains the Bellman minimum within ``tol``."""
    q = q_values(v, inst)
    return np.flatnonzero((q <= q.min(axis=0) + tol).sum(axis=0) > 1)
