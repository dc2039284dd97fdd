import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pdmdp.errors import PreconditionViolated, SingularMatrix
from pdmdp.numerics import (
    check_substochastic,
    lemma5_check,
    lemma6_check,
    neumann_series,
    pivot_ratio,
    random_substochastic,
    resolvent_apply,
    solve_linear,
)


def test_solve_identity_returns_rhs():
    b = np.array([3.0, -1.5, 7.25])
    assert np.array_equal(solve_linear(np.eye(3), b), b)


def test_solve_two_by_two_against_cramer():
    A = np.eye(2) - 0.9 * np.array([[0.0, 1.0], [1.0, 0.0]])
    det = 1 - 0.81
    expected = [(1 + 0.9 * 2) / det, (2 + 0.9 * 1) / det]
    x = solve_linear(A, [1.0, 2.0])
    np.testing.assert_allclose(x, expected, rtol=0, atol=1e-12)
    np.testing.assert_allclose(x, [14.736842105263158, 15.263157894736842], atol=1e-12)


def test_solve_empty_system():
    assert solve_linear(np.zeros((0, 0)), np.zeros(0)).shape == (0,)


def test_solve_singular_raises():
    with pytest.raises(SingularMatrix):
        solve_linear([[1.0, 2.0], [2.0, 4.0]], [1.0, 1.0])


def test_solve_rejects_non_square():
    with pytest.raises(ValueError):
        solve_linear(np.ones((2, 3)), np.ones(2))


def test_random_systems_meet_residual_bound():
    rng = np.random.default_rng(8)
    checked = 0
    while checked < 200:
        A = rng.normal(size=(8, 8))
        if pivot_ratio(A) > 1e12:
            continue
        b = rng.normal(size=8) * 10
        x = solve_linear(A, b)
        assert np.abs(A @ x - b).max() <= 1e-10 * (1 + np.abs(b).max())
        checked += 1


def test_resolvent_of_zero_matrix_is_identity():
    b = np.array([1.0, -2.0, 0.5])
    np.testing.assert_array_equal(resolvent_apply(np.zeros((3, 3)), 0.7, b), b)


def test_resolvent_geometric_series():
    assert resolvent_apply([[1.0]], 0.5, [1.0]) == pytest.approx([2.0], abs=1e-15)


@pytest.mark.parametrize("seed", range(20))
def test_resolvent_matches_truncated_neumann_series(seed):
    rng = np.random.default_rng(seed)
    P = random_substochastic(rng, 5)
    b = rng.normal(size=5)
    gamma, T = 0.9, 60
    bound = gamma ** (T + 1) * np.abs(b).max() / (1 - gamma)
    gap = np.abs(resolvent_apply(P, gamma, b) - neumann_series(P, gamma, b, T)).max()
    assert gap <= bound + 1e-12


def test_random_substochastic_rows():
    rng = np.random.default_rng(1)
    for _ in range(100):
        P = random_substochastic(rng, int(rng.integers(1, 8)))
        assert check_substochastic(P) <= 1 + 1e-12


def test_check_substochastic_rejects_excess_mass():
    with pytest.raises(ValueError):
        check_substochastic([[0.6, 0.6]])
    with pytest.raises(ValueError):
        check_substochastic([[-0.1, 0.5]])


@pytest.mark.parametrize("k", [0, 1, 2])
def test_lemma5_zero_matrix(k):
    assert lemma5_check(np.zeros((3, 3)), 0.9, k)


def test_lemma5_two_cycle_closed_form():
    P = np.array([[0.0, 1.0], [1.0, 0.0]])
    gamma = 0.9
    h = resolvent_apply(P, gamma, [1.0, 0.0])
    np.testing.assert_allclose(h, [1 / (1 - gamma**2), gamma / (1 - gamma**2)], atol=1e-12)
    assert lemma5_check(P, gamma, 0)


@settings(max_examples=200, deadline=None)
@given(
    seed=st.integers(0, 2**32 - 1),
    n=st.integers(1, 7),
    gamma=st.sampled_from([0.0, 0.1, 0.5, 0.9, 0.99]),
)
def test_lemma5_holds_on_random_matrices(seed, n, gamma):
    rng = np.random.default_rng(seed)
    P = random_substochastic(rng, n)
    assert lemma5_check(P, gamma, int(rng.integers(n)))


def test_lemma6_discount_zero():
    P = np.array([[0.5, 0.5], [0.2, 0.3]])
    c = np.array([1.0, 2.0])
    # v = c when gamma = 0, so any z < c_k meets the precondition
    assert lemma6_check(P, c, 1, np.array([0.4, 0.4]), 1.5, 0.0)


def test_lemma6_precondition_enforced():
    P = np.zeros((2, 2))
    with pytest.raises(PreconditionViolated):
        lemma6_check(P, [1.0, 1.0], 0, [0.0, 0.0], 2.0, 0.5)


def test_lemma6_on_worked_example_improvement():
    # Policy "stay" in both states has v = [30, 40] at gamma 0.9. Switching
    # state 2 (index 1) to "swap" gives 2 + 0.9 * 30 = 29 < 40, an improvement;
    # afterwards switching back must not improve.
    gamma = 0.9
    P_stay = np.eye(2)
    c_stay = np.array([3.0, 4.0])
    v = resolvent_apply(P_stay, gamma, c_stay)
    np.testing.assert_allclose(v, [30.0, 40.0])
    pi, z = np.array([1.0, 0.0]), 2.0
    assert v[1] > z + gamma * pi @ v
    assert lemma6_check(P_stay, c_stay, 1, pi, z, gamma)
    v_hat = np.array([30.0, 29.0])
    assert v_hat[1] < c_stay[1] + gamma * P_stay[1] @ v_hat


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 6), gamma=st.sampled_from([0.1, 0.5, 0.9, 0.99]))
def test_lemma6_holds_when_precondition_has_margin(seed, n, gamma):
    rng = np.random.default_rng(seed)
    P = random_substochastic(rng, n)
    c = rng.uniform(-1, 1, size=n)
    pi = random_substochastic(rng, 1, n)[0]
    k = int(rng.integers(n))
    v = resolvent_apply(P, gamma, c)
    z = v[k] - gamma * pi @ v - rng.uniform(1e-6, 1.0)
    assert lemma6_check(P, c, k, pi, z, gamma)
