"""Primal-dual method with closed-form optimal DRP directions.

The solver keeps an active set ``H`` of state-action pairs with distinct
states; ``G`` is the set of states covered by ``H``. Each iteration builds
the direction that is 1 on uncovered states and, on covered states, equals
the discounted probability of eventually leaving ``G`` under the actions in
``H``. A ratio test picks the step length and the constraint that becomes
tight; that pair either covers a new state or replaces the action of an
already covered one. The loop stops once every state is covered.
"""

import json
import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from . import oracles
from .dual_lp import StateActionPair, direction_slope, drp_feasible, step_size, tight_set
from .errors import (
    DuplicatePair,
    IterationCapExceeded,
    LemmaViolation,
    NotConverged,
    StallDetected,
)
from .mdp import SolverConfig, bellman_residual, greedy_policy, initial_feasible_value
from .numerics import solve_linear

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ActiveSet:
    """Ordered state-action pairs with pairwise distinct states."""

    pairs: tuple = ()

    def __post_init__(self):
        pairs = tuple(StateActionPair(int(s), int(a)) for s, a in self.pairs)
        states = [p.state for p in pairs]
        if len(set(states)) != len(states):
            raise ValueError(f"active set repeats a state: {pairs}")
        object.__setattr__(self, "pairs", pairs)

    @property
    def states(self):
        """Covered states in ``H`` order."""
        return tuple(p.state for p in self.pairs)

    @property
    def covered(self):
        return frozenset(self.states)

    def __len__(self):
        return len(self.pairs)

    def __contains__(self, pair):
        return StateActionPair(*pair) in self.pairs


def optimal_drp_direction(active, inst):
    """Closed-form maximizer of the DRP for active set ``active``.

    Uncovered states get 1; covered states solve
    ``(I - gamma P_HG) x = gamma P_HGbar 1`` where row ``k`` uses the
    transition row of the ``k``-th active pair.
    """
    vhat = np.ones(inst.n)
    if not active.pairs:
        return vhat
    G = np.array(active.states)
    actions = np.array([p.action for p in active.pairs])
    outside = np.ones(inst.n, dtype=bool)
    outside[G] = False
    rows = inst.trans[actions, G]
    A = np.eye(len(G)) - inst.gamma * rows[:, G]
    b = inst.gamma * rows[:, outside].sum(axis=1)
    vhat[G] = solve_linear(A, b)
    return vhat


def update_active_set(active, entering):
    """Insert ``entering``, displacing the pair that covers the same state if any.

    Returns the new active set and the displaced pair (``None`` when the
    entering pair covers a new state).
    """
    entering = StateActionPair(*entering)
    if entering in active.pairs:
        raise DuplicatePair(f"{entering} is already active")
    exited = next((p for p in active.pairs if p.state == entering.state), None)
    kept = tuple(p for p in active.pairs if p != exited)
    return ActiveSet(kept + (entering,)), exited


@dataclass(frozen=True)
class PdIterationEvent:
    iter: int
    theta: float
    entering: StateActionPair
    exited: StateActionPair | None
    g_size: int
    objective: float
    drp_value: float

    def to_json(self):
        d = asdict(self)
        d["entering"] = list(self.entering)
        d["exited"] = None if self.exited is None else list(self.exited)
        return d

    @classmethod
    def from_json(cls, d):
        exited = d["exited"]
        return cls(
            iter=int(d["iter"]),
            theta=float(d["theta"]),
            entering=StateActionPair(*d["entering"]),
            exited=None if exited is None else StateActionPair(*exited),
            g_size=int(d["g_size"]),
            objective=float(d["objective"]),
            drp_value=float(d["drp_value"]),
        )


@dataclass
class PdTrace:
    """Iteration log of one primal-dual solve.

    ``iterates`` holds the value vector before the first and after every
    iteration; it is kept in memory only and is not part of the exported trace.
    """

    events: list
    final_v: np.ndarray
    final_policy: np.ndarray
    iterates: list = field(default_factory=list, repr=False)

    @property
    def iterations(self):
        return len(self.events)

    def jsonl_lines(self):
        for ev in self.events:
            yield json.dumps(ev.to_json())
        yield json.dumps(
            {
                "final_v": [float(x) for x in self.final_v],
                "final_policy": [int(a) for a in self.final_policy],
                "iterations": self.iterations,
            }
        )

    def write_jsonl(self, fp):
        for line in self.jsonl_lines():
            fp.write(line + "\n")

    @classmethod
    def read_jsonl(cls, fp):
        records = [json.loads(line) for line in fp if line.strip()]
        if not records or "final_v" not in records[-1]:
            raise ValueError("trace is missing its final summary line")
        final = records.pop()
        events = [PdIterationEvent.from_json(r) for r in records]
        if final["iterations"] != len(events):
            raise ValueError("trace summary disagrees with its event count")
        return cls(events, np.array(final["final_v"], dtype=float), np.array(final["final_policy"]))


def assert_lemma2(iteration, J, active, vhat, inst):
    """At most one tight pair lies outside ``H``, and it is strictly slack along ``vhat``.

    Only valid from a start with no tight pair and while every previous
    ratio test had a unique minimizer.
    """
    extra = [p for p in J if p not in active.pairs]
    if len(extra) > 1:
        raise LemmaViolation(
            f"{len(extra)} tight pairs outside the active set: {extra}",
            iteration=iteration,
            pair=extra,
        )
    if extra:
        (p,) = extra
        slope = direction_slope(vhat, inst)[p.action, p.state]
        if not slope < 0:
            raise LemmaViolation(
                f"displaced pair {p} has slope {slope!r}, expected negative",
                iteration=iteration,
                pair=p,
            )


def assert_lemma3_lemma4(vhat, J, inst, iteration=None, tol=1e-9):
    """``vhat`` is DRP feasible and dominates every vertex of the DRP polytope."""
    if not drp_feasible(vhat, J, inst, tol):
        raise LemmaViolation("direction is not DRP feasible", iteration=iteration)
    V = oracles.drp_vertices(J, inst, tol)
    excess = V - vhat[None, :]
    if V.size and excess.max() > tol:
        w = V[int(np.argmax(excess.max(axis=1)))]
        raise LemmaViolation(
            f"feasible point {w} is not dominated by {vhat}",
            iteration=iteration,
            witness=w,
        )


def _assert_active_tight(iteration, J, active):
    missing = [p for p in active.pairs if p not in J]
    if missing:
        raise LemmaViolation(f"active pairs lost tightness: {missing}", iteration=iteration)


def solve_pd(inst, config=None):
    """Run the primal-dual method to optimality and return its trace."""
    config = config or SolverConfig()
    cap = config.iteration_cap(inst.n, inst.m)
    v = initial_feasible_value(inst)
    active = ActiveSet()
    events = []
    iterates = [v.copy()]
    # the lemmas presume no pair is tight at the start (strictly positive costs);
    # the single-displacement check also needs every argmin so far to be unique
    clean_start = config.assert_lemmas and not tight_set(v, inst, config.feas_tol)
    if config.assert_lemmas and not clean_start:
        logger.info("initial point has tight pairs; lemma assertions skipped")
    unique_so_far = clean_start
    previous = None
    while len(active) < inst.n:
        k = len(events) + 1
        if k > cap:
            raise IterationCapExceeded(f"no convergence within {cap} iterations")
        vhat = optimal_drp_direction(active, inst)
        if clean_start:
            J = tight_set(v, inst, config.feas_tol)
            _assert_active_tight(k, J, active)
            if unique_so_far:
                assert_lemma2(k, J, active, vhat, inst)
            assert_lemma3_lemma4(vhat, J, inst, iteration=k, tol=config.feas_tol)
        step = step_size(
            v,
            vhat,
            inst,
            config.tie_tol,
            slope_tol=config.slope_tol,
            feas_tol=config.feas_tol,
            exclude=active.pairs,
        )
        entering = step.argmin_pairs[0]
        if entering == previous:
            raise StallDetected(f"{entering} entered on consecutive iterations")
        v = v + step.theta * vhat
        active, exited = update_active_set(active, entering)
        unique_so_far = unique_so_far and len(step.argmin_pairs) == 1
        previous = entering
        events.append(
            PdIterationEvent(
                iter=k,
                theta=step.theta,
                entering=entering,
                exited=exited,
                g_size=len(active),
                objective=float(v.sum()),
                drp_value=float(vhat.sum()),
            )
        )
        iterates.append(v.copy())
        logger.debug("iter %d theta=%.6g enter=%s exit=%s |G|=%d", k, step.theta, entering, exited, len(active))
    residual = bellman_residual(v, inst)
    if residual > config.tol:
        raise NotConverged(
            f"Bellman residual {residual:.3g} exceeds tolerance {config.tol:.3g}",
            v=v,
            residual=residual,
            sweeps=len(events),
        )
    return PdTrace(events, v, greedy_policy(v, inst), iterates)
