import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from wassmatch.transport import (
    Coupling,
    SolverError,
    euclidean_cost,
    exact_ot,
    inverse_min_distance_marginal,
    marginal_from_minima,
    round_to_feasible,
    sinkhorn,
    uniform_marginal,
    wasserstein_distance,
)


def brute_force_assignment_wd(C):
    """Uniform n x n OT optimum by enumerating permutations (Birkhoff vertices)."""
    n = C.shape[0]
    return min(sum(C[i, p[i]] for i in range(n)) for p in itertools.permutations(range(n))) / n


def two_by_two_family_optimum(C, grid=50001):
    # uniform 2x2 plans form the 1-parameter family [[a, .5-a], [.5-a, a]]
    a = np.linspace(0.0, 0.5, grid)
    costs = a * C[0, 0] + (0.5 - a) * C[0, 1] + (0.5 - a) * C[1, 0] + a * C[1, 1]
    k = np.argmin(costs)
    return a[k], costs[k]


# -- euclidean_cost ---------------------------------------------------------

def test_euclidean_cost_345():
    assert euclidean_cost([(0, 0)], [(3, 4)]).tolist() == [[5.0]]


def test_euclidean_cost_identity():
    assert euclidean_cost([(1, 1)], [(1, 1)]).tolist() == [[0.0]]


def test_euclidean_cost_unit_geometry():
    C = euclidean_cost([(0, 0), (1, 0)], [(0, 1)])
    np.testing.assert_allclose(C, [[1.0], [math.sqrt(2)]])


def test_euclidean_cost_symmetric_for_same_points():
    X = np.random.default_rng(1).normal(size=(6, 4))
    C = euclidean_cost(X, X)
    np.testing.assert_allclose(C, C.T)
    np.testing.assert_allclose(np.diag(C), 0.0)


@pytest.mark.parametrize("X, Y", [([(0, 0)], [(1, 2, 3)]), ([], [(1, 2)]), ([(1, 2)], [])])
def test_euclidean_cost_rejects_bad_input(X, Y):
    with pytest.raises(ValueError):
        euclidean_cost(X, Y)


def test_degenerate_rows_get_percentile_penalty():
    X = [(0, 0), (0, 0)]
    Y = [(1, 0), (3, 0), (0, 2)]
    C = euclidean_cost(X, Y, x_degenerate=[False, True])
    valid = np.array([1.0, 3.0, 2.0])
    np.testing.assert_allclose(C[0], valid)
    np.testing.assert_allclose(C[1], np.percentile(valid, 99))


# -- marginals --------------------------------------------------------------

@pytest.mark.parametrize("n, expected", [(4, [0.25] * 4), (1, [1.0]), (3, [1 / 3] * 3)])
def test_uniform_marginal(n, expected):
    np.testing.assert_allclose(uniform_marginal(n), expected)


def test_uniform_marginal_rejects_zero():
    with pytest.raises(ValueError):
        uniform_marginal(0)


def test_inverse_min_distance_worked_example():
    w = marginal_from_minima([0.35, 0.37, 0.58])
    np.testing.assert_allclose(np.round(w, 2), [0.39, 0.37, 0.24])


def test_inverse_min_distance_from_cost_rows_and_columns():
    C = np.array([[0.35, 0.9, 1.2, 0.8],
                  [0.5, 0.37, 1.0, 0.9],
                  [0.58, 0.7, 0.6, 1.1]])
    np.testing.assert_allclose(inverse_min_distance_marginal(C, "source"),
                               marginal_from_minima([0.35, 0.37, 0.58]))
    np.testing.assert_allclose(inverse_min_distance_marginal(C, "target"),
                               marginal_from_minima([0.35, 0.37, 0.6, 0.8]))


def test_inverse_min_distance_equal_minima_is_uniform():
    C = np.array([[0.2, 0.5], [0.9, 0.2], [0.2, 0.2]])
    np.testing.assert_allclose(inverse_min_distance_marginal(C), uniform_marginal(3))


def test_inverse_min_distance_half_quarter():
    # 1/0.5 = 2 and 1/0.25 = 4, so weights 2/6 and 4/6
    np.testing.assert_allclose(marginal_from_minima([0.5, 0.25]), [2 / 6, 4 / 6])


def test_inverse_min_distance_zero_minimum_is_clamped():
    w = inverse_min_distance_marginal(np.array([[0.0, 1.0], [0.5, 2.0]]))
    assert np.all(np.isfinite(w))
    assert w[0] > 0.99
    assert w.sum() == pytest.approx(1.0)


def test_inverse_min_distance_bad_side():
    with pytest.raises(ValueError):
        inverse_min_distance_marginal(np.ones((2, 2)), "middle")


# -- wasserstein_distance ---------------------------------------------------

def test_wd_zero_cost():
    plan = np.outer(uniform_marginal(3), uniform_marginal(2))
    assert wasserstein_distance(np.zeros((3, 2)), plan) == 0.0


def test_wd_scalar():
    assert wasserstein_distance([[2.0]], [[1.0]]) == 2.0


def test_wd_accepts_coupling_and_checks_shape():
    c = Coupling(plan=np.array([[0.5, 0.5]]), wd=0.0)
    assert wasserstein_distance([[1.0, 3.0]], c) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        wasserstein_distance(np.ones((2, 2)), c)


# -- sinkhorn ---------------------------------------------------------------

def test_sinkhorn_one_by_one():
    res = sinkhorn([[0.7]], [1.0], [1.0])
    np.testing.assert_allclose(res.plan, [[1.0]])
    assert res.wd == pytest.approx(0.7)
    assert res.converged


def test_sinkhorn_constant_cost_gives_product_plan():
    mu, nu = uniform_marginal(3), uniform_marginal(4)
    res = sinkhorn(np.full((3, 4), 2.5), mu, nu)
    np.testing.assert_allclose(res.plan, np.outer(mu, nu), atol=1e-12)
    assert res.wd == pytest.approx(2.5)


def test_sinkhorn_two_by_two_near_exact():
    C = np.array([[1.0, 3.0], [2.0, 1.0]])
    a_star, cost_star = two_by_two_family_optimum(C)
    assert a_star == pytest.approx(0.5)
    assert cost_star == pytest.approx(1.0)
    u = uniform_marginal(2)
    res = sinkhorn(C, u, u, epsilon=0.001)
    np.testing.assert_allclose(res.plan, [[0.5, 0.0], [0.0, 0.5]], atol=0.02)
    assert abs(res.wd - cost_star) <= 0.02


def test_sinkhorn_wd_is_inner_product():
    rng = np.random.default_rng(3)
    C = rng.random((4, 6))
    res = sinkhorn(C, uniform_marginal(4), uniform_marginal(6))
    assert res.wd == pytest.approx(float(np.sum(C * res.plan)), rel=1e-12)


def test_sinkhorn_non_converged_reports_partial():
    rng = np.random.default_rng(4)
    C = rng.random((20, 30))
    res = sinkhorn(C, uniform_marginal(20), uniform_marginal(30), epsilon=1e-4, max_iter=3)
    assert not res.converged
    assert res.iterations_used == 3
    # rounding still returns a feasible plan
    np.testing.assert_allclose(res.plan.sum(axis=1), uniform_marginal(20), atol=1e-12)


def test_sinkhorn_tiny_epsilon_stays_finite():
    C = np.array([[0.0, 50.0], [50.0, 0.0]])
    res = sinkhorn(C, uniform_marginal(2), uniform_marginal(2), epsilon=1e-3)
    assert np.all(np.isfinite(res.plan))
    assert res.wd == pytest.approx(0.0, abs=1e-9)


def test_sinkhorn_rejects_bad_inputs():
    with pytest.raises(ValueError):
        sinkhorn([[1.0]], [1.0], [1.0], epsilon=0.0)
    with pytest.raises(ValueError):
        sinkhorn([[1.0, 2.0]], [1.0], [1.0])
    with pytest.raises(ValueError):
        sinkhorn([[-1.0]], [1.0], [1.0])


def test_sinkhorn_raises_solver_error_on_nan(monkeypatch):
    import wassmatch.transport as tr

    monkeypatch.setattr(tr, "_soft_update", lambda C, lm, ln, f, g, eps: (f * np.nan, g))
    with pytest.raises(SolverError, match="iteration"):
        tr.sinkhorn(np.ones((2, 2)), uniform_marginal(2), uniform_marginal(2))


@settings(max_examples=40, deadline=None)
@given(
    st.integers(1, 7), st.integers(1, 7), st.integers(0, 2**32 - 1), st.booleans(),
)
def test_sinkhorn_feasibility_property(n, m, seed, inverse):
    rng = np.random.default_rng(seed)
    C = rng.random((n, m))
    if inverse:
        mu, nu = inverse_min_distance_marginal(C, "source"), inverse_min_distance_marginal(C, "target")
    else:
        mu, nu = uniform_marginal(n), uniform_marginal(m)
    res = sinkhorn(C, mu, nu)
    assert np.max(np.abs(res.plan.sum(axis=1) - mu)) <= 1e-6
    assert np.max(np.abs(res.plan.sum(axis=0) - nu)) <= 1e-6
    assert np.all(res.plan >= 0)


def test_round_to_feasible_restores_marginals():
    rng = np.random.default_rng(5)
    mu, nu = uniform_marginal(4), uniform_marginal(5)
    plan = np.outer(mu, nu) * (1 + 0.05 * rng.normal(size=(4, 5)))
    fixed = round_to_feasible(plan, mu, nu)
    np.testing.assert_allclose(fixed.sum(axis=1), mu, atol=1e-15)
    np.testing.assert_allclose(fixed.sum(axis=0), nu, atol=1e-15)
    assert np.abs(fixed - plan).sum() < 0.2


# -- exact_ot ---------------------------------------------------------------

def test_exact_two_by_two():
    u = uniform_marginal(2)
    res = exact_ot(np.array([[1.0, 3.0], [2.0, 1.0]]), u, u)
    assert res.wd == 1.0
    np.testing.assert_allclose(res.plan, [[0.5, 0.0], [0.0, 0.5]])


def test_exact_zero_diagonal():
    rng = np.random.default_rng(6)
    C = rng.random((5, 5)) + 0.1
    np.fill_diagonal(C, 0.0)
    u = uniform_marginal(5)
    res = exact_ot(C, u, u)
    assert res.wd == 0.0
    np.testing.assert_allclose(res.plan, np.eye(5) / 5)


def test_exact_one_row():
    C = np.array([[0.2, 0.4, 0.9]])
    nu = uniform_marginal(3)
    res = exact_ot(C, [1.0], nu)
    np.testing.assert_allclose(res.plan, [nu], atol=1e-12)
    assert res.wd == pytest.approx(C.mean())


@pytest.mark.parametrize("seed", range(10))
def test_exact_matches_permutation_enumeration(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 7))
    C = rng.random((n, n))
    u = uniform_marginal(n)
    assert exact_ot(C, u, u).wd == pytest.approx(brute_force_assignment_wd(C), abs=1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_exact_lp_matches_cvxpy(seed):
    cp = pytest.importorskip("cvxpy")
    rng = np.random.default_rng(100 + seed)
    n, m = int(rng.integers(2, 6)), int(rng.integers(2, 6))
    C = rng.random((n, m))
    mu = rng.random(n) + 0.1
    mu /= mu.sum()
    nu = rng.random(m) + 0.1
    nu /= nu.sum()
    T = cp.Variable((n, m), nonneg=True)
    prob = cp.Problem(cp.Minimize(cp.sum(cp.multiply(C, T))),
                      [cp.sum(T, axis=1) == mu, cp.sum(T, axis=0) == nu])
    prob.solve()
    res = exact_ot(C, mu, nu)
    assert res.wd == pytest.approx(prob.value, abs=1e-6)
    np.testing.assert_allclose(res.plan.sum(axis=1), mu, atol=1e-9)
    np.testing.assert_allclose(res.plan.sum(axis=0), nu, atol=1e-9)


def test_exact_size_guard():
    with pytest.raises(ValueError, match="size guard"):
        exact_ot(np.ones((101, 100)), uniform_marginal(101), uniform_marginal(100))


def test_exact_identity_on_self_cost():
    X = np.random.default_rng(8).normal(size=(7, 3))
    u = uniform_marginal(7)
    assert exact_ot(euclidean_cost(X, X), u, u).wd == pytest.approx(0.0, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 5), st.integers(1, 5)),
              elements=st.floats(0, 1, allow_nan=False)))
def test_exact_transpose_symmetry(C):
    n, m = C.shape
    mu, nu = uniform_marginal(n), uniform_marginal(m)
    assert exact_ot(C, mu, nu).wd == pytest.approx(exact_ot(C.T, nu, mu).wd, abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.1, 10.0))
def test_exact_scale_equivariance(seed, lam):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 6))
    C = rng.random((n, n))
    u = uniform_marginal(n)
    base = exact_ot(C, u, u)
    scaled = exact_ot(lam * C, u, u)
    assert scaled.wd == pytest.approx(lam * base.wd, rel=1e-9, abs=1e-12)
    np.testing.assert_array_equal(base.plan.argmax(axis=1), scaled.plan.argmax(axis=1))


@pytest.mark.parametrize("seed", range(10))
def test_exact_never_above_sinkhorn(seed):
    rng = np.random.default_rng(200 + seed)
    n, m = int(rng.integers(2, 8)), int(rng.integers(2, 8))
    C = rng.random((n, m))
    mu, nu = inverse_min_distance_marginal(C, "source"), inverse_min_distance_marginal(C, "target")
    assert exact_ot(C, mu, nu).wd <= sinkhorn(C, mu, nu).wd + 1e-9
