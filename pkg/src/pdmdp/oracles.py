"""Brute-force reference solvers used to cross-check the closed-form paths.

These share no code with the solvers they check beyond the instance data
model: policy values come from batched ``numpy.linalg.solve`` and DRP optima
from vertex enumeration.
"""

import itertools
from math import comb

import numpy as np

ENUMERATION_LIMIT = 10**6
_CHUNK = 4096


def _batched(iterable, size):
    it = iter(iterable)
    while chunk := list(itertools.islice(it, size)):
        yield chunk


def all_policy_values(trans, cost, gamma, limit=ENUMERATION_LIMIT):
    """Yield ``(policies, values)`` chunks for every deterministic policy.

    ``trans`` is ``(m, n, k)`` with ``k >= n``; only the first ``n`` columns
    are treated as recurrent, so the same routine evaluates first-passage
    subproblems whose remaining mass exits.
    """
    m, n = cost.shape
    if m**n > limit:
        raise ValueError(f"{m}**{n} policies exceeds the enumeration limit {limit}")
    states = np.arange(n)
    eye = np.eye(n)
    for chunk in _batched(itertools.product(range(m), repeat=n), _CHUNK):
        pol = np.array(chunk, dtype=int).reshape(-1, n)
        P = trans[pol, states][:, :, :n]
        c = cost[pol, states]
        values = np.linalg.solve(eye - gamma * P, c[..., None])[..., 0]
        yield pol, values


def enumerate_optimal(inst, limit=ENUMERATION_LIMIT):
    """Optimal value and an optimal policy by evaluating all ``m**n`` policies."""
    best_v = np.full(inst.n, np.inf)
    best_pol = None
    best_sum = np.inf
    for pol, values in all_policy_values(inst.trans, inst.cost, inst.gamma, limit):
        best_v = np.minimum(best_v, values.min(axis=0))
        sums = values.sum(axis=1)
        k = int(np.argmin(sums))
        if sums[k] < best_sum:
            best_sum, best_pol = sums[k], pol[k]
    return best_v, best_pol


def drp_constraints(pairs, inst):
    """Rows ``A`` and right-hand side ``b`` of ``{w : w <= 1, w_i <= gamma P_i(u) w for (i,u) in pairs}``."""
    n = inst.n
    rows = [np.eye(n)]
    rhs = [np.ones(n)]
    if pairs:
        states = np.array([p.state for p in pairs])
        actions = np.array([p.action for p in pairs])
        A = -inst.gamma * inst.trans[actions, states]
        A[np.arange(len(pairs)), states] += 1.0
        rows.append(A)
        rhs.append(np.zeros(len(pairs)))
    return np.vstack(rows), np.concatenate(rhs)


def drp_vertices(pairs, inst, tol=1e-9, max_subsets=2_000_000):
    """Every basic feasible point of the DRP polytope for constraint set ``pairs``.

    The polytope is pointed (it contains the box rows), and its recession cone
    lies in the nonpositive orthant, so every feasible point is dominated by
    some vertex.
    """
    A, b = drp_constraints(pairs, inst)
    k, n = A.shape
    if comb(k, n) > max_subsets:
        raise ValueError(f"C({k}, {n}) bases exceeds the enumeration limit")
    found = []
    for chunk in _batched(itertools.combinations(range(k), n), _CHUNK):
        idx = np.array(chunk)
        M = A[idx]
        rhs = b[idx]
        ok = np.abs(np.linalg.det(M)) > 1e-10
        if not ok.any():
            continue
        w = np.linalg.solve(M[ok], rhs[ok][..., None])[..., 0]
        feasible = np.all(w @ A.T <= b + tol, axis=1)
        found.append(w[feasible])
    if not found:
        return np.zeros((0, n))
    return np.vstack(found)


def drp_maximizer(pairs, inst, tol=1e-9):
    """Vertex maximizing ``1^T w`` over the DRP polytope."""
    V = drp_vertices(pairs, inst, tol)
    return V[np.argmax(V.sum(axis=1))]
