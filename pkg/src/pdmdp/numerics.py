"""Dense linear algebra and substochastic-matrix utilities.

Two resolvent properties that the primal-dual optimality argument relies on
are exposed as executable checks (:func:`lemma5_check`, :func:`lemma6_check`)
so they can be exercised on random inputs.
"""

import warnings

import numpy as np
import scipy.linalg

from .errors import PreconditionViolated, SingularMatrix

SUBSTOCHASTIC_TOL = 1e-12
PIVOT_RATIO_LIMIT = 1e12


def _as_matrix(A):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise ValueError(f"expected a 2-d array, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


def lu_factor(A):
    """LU factorization with partial pivoting; raises on an exactly singular pivot."""
    A = _as_matrix(A)
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"matrix must be square, got shape {A.shape}")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(A, check_finite=False)
    diag = np.abs(np.diag(lu))
    if diag.size and diag.min() == 0.0:
        raise SingularMatrix("zero pivot in LU factorization")
    return lu, piv


def pivot_ratio(A):
    """Ratio of largest to smallest |pivot| of the partial-pivoting LU of ``A``.

    Used as a cheap conditioning proxy when generating random test matrices.
    """
    A = _as_matrix(A)
    if A.size == 0:
        return 1.0
    try:
        lu, _ = lu_factor(A)
    except SingularMatrix:
        return np.inf
    diag = np.abs(np.diag(lu))
    return float(diag.max() / diag.min())


def solve_linear(A, b):
    """Solve ``A x = b`` for square nonsingular ``A``.

    Empty systems (``A`` of shape ``(0, 0)``) return an empty vector.
    """
    A = _as_matrix(A)
    b = np.asarray(b, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError(f"matrix must be square, got shape {A.shape}")
    if b.shape[0] != n:
        raise ValueError(f"right-hand side has length {b.shape[0]}, expected {n}")
    if n == 0:
        return np.zeros(b.shape)
    lu_piv = lu_factor(A)
    x = scipy.linalg.lu_solve(lu_piv, b, check_finite=False)
    if not np.all(np.isfinite(x)):
        raise SingularMatrix("solution is not finite")
    return x


def check_substochastic(P, tol=SUBSTOCHASTIC_TOL):
    """Return the maximum row sum of ``P`` after checking it is substochastic."""
    P = _as_matrix(P)
    if np.any(P < 0):
        raise ValueError("substochastic matrix has negative entries")
    row_sums = P.sum(axis=1)
    max_row_sum = float(row_sums.max()) if row_sums.size else 0.0
    if max_row_sum > 1.0 + tol:
        raise ValueError(f"row sum {max_row_sum!r} exceeds 1")
    return max_row_sum


def resolvent_apply(P, gamma, b):
    """Return ``(I - gamma P)^{-1} b`` by a linear solve."""
    P = _as_matrix(P)
    return solve_linear(np.eye(P.shape[0]) - gamma * P, b)


def neumann_series(P, gamma, b, terms):
    """Truncated series ``sum_{t=0..terms} (gamma P)^t b``.

    An independent route to :func:`resolvent_apply`; the tail is bounded by
    ``gamma**(terms+1) * ||b||_inf / (1 - gamma)`` for substochastic ``P``.
    """
    P = _as_matrix(P)
    term = np.asarray(b, dtype=float).copy()
    total = term.copy()
    for _ in range(terms):
        term = gamma * (P @ term)
        total += term
    return total


def random_substochastic(rng, n, cols=None):
    """Sample a random substochastic matrix.

    Each row is a random point of the simplex scaled by a uniform factor in
    ``[0, 1]``.
    """
    cols = n if cols is None else cols
    raw = rng.random((n, cols))
    raw /= raw.sum(axis=1, keepdims=True)
    return raw * rng.random((n, 1))


def lemma5_check(P, gamma, k):
    """Check that ``e_k`` uniquely maximizes ``pi^T (I - gamma P)^{-1} e_k``.

    Over stochastic vectors ``pi`` the maximum of the linear form sits at the
    largest entry of ``h = (I - gamma P)^{-1} e_k``, so the claim holds iff
    ``h_k`` strictly exceeds every other entry.
    """
    P = _as_matrix(P)
    check_substochastic(P)
    n = P.shape[0]
    e = np.zeros(n)
    e[k] = 1.0
    h = resolvent_apply(P, gamma, e)
    others = np.delete(h, k)
    return bool(np.all(h[k] > others))


def lemma6_check(P, c, k, pi, z, gamma):
    """Check the single-row replacement property behind policy improvement.

    With ``v = (I - gamma P)^{-1} c`` and ``v_k > z + gamma pi^T v``, replace
    row ``k`` of ``P`` by ``pi`` and ``c_k`` by ``z``, solve for ``vhat``, and
    report whether ``vhat_k < c_k + gamma P[k] @ vhat``.
    """
    P = _as_matrix(P)
    c = np.asarray(c, dtype=float)
    pi = np.asarray(pi, dtype=float)
    check_substochastic(P)
    check_substochastic(pi[None, :])
    v = resolvent_apply(P, gamma, c)
    if not v[k] > z + gamma * pi @ v:
        raise PreconditionViolated(
            f"v[{k}] = {v[k]!r} does not exceed z + gamma pi.v = {z + gamma * pi @ v!r}"
        )
    P_hat = P.copy()
    P_hat[k] = pi
    c_hat = c.copy()
    c_hat[k] = z
    v_hat = resolvent_apply(P_hat, gamma, c_hat)
    return bool(v_hat[k] < c[k] + gamma * P[k] @ v_hat)
