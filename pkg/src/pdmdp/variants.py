"""Value-iteration variants written as primal-dual updates with suboptimal DRP directions.

Gauss-Seidel-Jacobi (GSJ) moves one coordinate along ``e_i`` by the full
ratio-test step. Gauss-Seidel (GS) uses the same direction with a shorter
step. Value iteration (VI) moves along the Bellman improvement ``Tv - v`` with
unit step.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import NotConverged, StateAlreadyTight
from .mdp import bellman_backup, bellman_residual, check_value, constraint_slack, initial_feasible_value

VARIANTS = ("vi", "gs", "gsj")


def _state_slack(v, i, inst):
    return inst.cost[:, i] + inst.gamma * (inst.trans[:, i, :] @ v) - v[i]


def gsj_theta(v, i, inst):
    """Step length of the GSJ update at state ``i``."""
    v = check_value(v, inst)
    return float(np.min(_state_slack(v, i, inst) / (1.0 - inst.gamma * inst.trans[:, i, i])))


def gs_step_length(v, i, inst):
    """Step length of the GS update at state ``i``: the smallest slack."""
    v = check_value(v, inst)
    return float(np.min(_state_slack(v, i, inst)))


def gsj_component_update(v, i, inst):
    """Replace ``v_i`` by ``min_u (c_i(u) + gamma sum_{j != i} P_ij(u) v_j) / (1 - gamma P_ii(u))``."""
    v = check_value(v, inst).copy()
    row = inst.trans[:, i, :]
    off_diag = row @ v - row[:, i] * v[i]
    v[i] = np.min((inst.cost[:, i] + inst.gamma * off_diag) / (1.0 - inst.gamma * row[:, i]))
    return v


def gsj_as_pd_update(v, i, inst, tol=1e-9):
    """GSJ as a primal-dual step: unit direction ``e_i`` and its ratio-test step.

    State ``i`` must have no tight constraint, otherwise ``e_i`` is not a
    DRP-feasible direction.
    """
    v = check_value(v, inst)
    if np.any(_state_slack(v, i, inst) <= tol):
        raise StateAlreadyTight(f"state {i} already has a tight constraint")
    vhat = np.zeros(inst.n)
    vhat[i] = 1.0
    return vhat, gsj_theta(v, i, inst)


def first_untight_state(v, inst, tol=1e-9):
    """Lowest-index state without a tight constraint, or ``None`` if every state has one."""
    slack = constraint_slack(v, inst)
    free = np.flatnonzero(np.all(slack > tol, axis=0))
    return int(free[0]) if free.size else None


def gs_sweep(v, inst, order=None):
    v = check_value(v, inst).copy()
    for i in range(inst.n) if order is None else order:
        v[i] = np.min(inst.cost[:, i] + inst.gamma * (inst.trans[:, i, :] @ v))
    return v


def gsj_sweep(v, inst, order=None):
    v = check_value(v, inst)
    for i in range(inst.n) if order is None else order:
        v = gsj_component_update(v, i, inst)
    return v


def vi_step(v, inst):
    """Value iteration as ``v + theta * vhat`` with ``vhat = Tv - v`` and ``theta = 1``."""
    v = check_value(v, inst)
    vhat = bellman_backup(v, inst) - v
    return v + vhat, vhat, 1.0


@dataclass
class VariantResult:
    v: np.ndarray
    sweeps: int
    residual: float
    iterates: list = field(default_factory=list, repr=False)


def iterate_variant(inst, variant, *, mode="sweep", order=None, v0=None):
    """Yield successive iterates of a variant (one per sweep), without end.

    With ``variant="gsj"`` and ``mode="alternating"`` each sweep updates a
    single component, cycling through ``order`` (default: natural order).
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    if mode not in ("sweep", "alternating"):
        raise ValueError(f"unknown mode {mode!r}")
    order = list(range(inst.n)) if order is None else list(order)
    v = initial_feasible_value(inst) if v0 is None else check_value(v0, inst).copy()
    return _iterate(inst, variant, mode, order, v)


def _iterate(inst, variant, mode, order, v):
    k = 0
    while True:
        if variant == "vi":
            v = vi_step(v, inst)[0]
        elif variant == "gs":
            v = gs_sweep(v, inst, order)
        elif mode == "alternating":
            v = gsj_component_update(v, order[k % len(order)], inst)
        else:
            v = gsj_sweep(v, inst, order)
        k += 1
        yield v


def run_variant(inst, variant, tol=1e-8, max_sweeps=1000, *, mode="sweep", order=None, v0=None):
    """Iterate a variant from a feasible start until the Bellman residual is at most ``tol``."""
    v = initial_feasible_value(inst) if v0 is None else check_value(v0, inst).copy()
    steps = iterate_variant(inst, variant, mode=mode, order=order, v0=v)
    iterates = [v]
    residual = bellman_residual(v, inst)
    best_v, best_res = v, residual
    sweeps = 0
    while residual > tol:
        if sweeps >= max_sweeps:
            raise NotConverged(
                f"{variant} did not reach residual {tol:.3g} in {max_sweeps} sweeps "
                f"(best {best_res:.3g})",
                v=best_v,
                residual=best_res,
                sweeps=sweeps,
            )
        v = next(steps)
        sweeps += 1
        iterates.append(v)
        residual = bellman_residual(v, inst)
        if residual < best_res:
            best_v, best_res = v, residual
    return VariantResult(v, sweeps, residual, iterates)
