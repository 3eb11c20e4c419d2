import numpy as np
import pytest

from ocoboost import verify
from ocoboost.errors import OracleBudgetError
from ocoboost.simplex import project_simplex


@pytest.mark.parametrize("k", [2, 3, 5])
def test_lowerbound_holds(k):
    res = verify.check_lowerbound(k, 2000, np.random.default_rng(k))
    assert res.passed and res.worst_violation <= 1e-9


def test_lowerbound_tight_cases():
    # h != y with p = y attains the bound with equality
    res = verify.check_lowerbound(3, 0, np.random.default_rng(0))
    assert res.worst_violation == 0.0


@pytest.mark.parametrize("k", [2, 4, 6])
def test_upperbound_holds(k):
    res = verify.check_upperbound(k, verify.DEFAULT_GAMMAS, 2000, np.random.default_rng(k))
    assert res.passed, res.witness


def test_upperbound_worked_example():
    h, gamma = np.array([0.9, 0.1]), 0.5
    proj = project_simplex(h / gamma)
    np.testing.assert_allclose(proj, [1.0, 0.0])
    c = (2 * h - 1) / gamma - (2 * np.eye(2)[0] - 1)
    assert min(c) <= 2 * (proj[0] - 1) + 1e-12


@pytest.mark.parametrize("k", [2, 3, 6])
def test_upperbound_real_holds(k):
    res = verify.check_upperbound_real(k, verify.DEFAULT_GAMMAS, 2000, np.random.default_rng(k))
    assert res.passed, res.witness


def test_equivalence_examples():
    p, h, y = np.eye(3)[1], np.eye(3)[0], np.eye(3)[1]
    lhs = p @ ((2 * h - 1) / 0.5 - (2 * y - 1))
    rhs = (2 * p - 1) @ (h / 0.5 - y)
    assert lhs == rhs == -3
    res = verify.check_equivalence(20_000, np.random.default_rng(1))
    assert res.passed and res.worst_violation <= 1e-12


def test_expectation_passes_under_independence():
    assert verify.check_expectation(50_000, np.random.default_rng(2)).passed


def test_expectation_point_mass_is_exact():
    res = verify.check_expectation(1000, np.random.default_rng(2), point_mass=True)
    assert res.passed and res.worst_violation == 0.0


def test_expectation_flags_dependent_predictor():
    res = verify.check_expectation(50_000, np.random.default_rng(3), dependent=True)
    assert not res.passed
    assert res.worst_violation > 0.1
    assert "mean_gap" in res.witness


def test_prediction_random_and_deterministic_votes():
    assert verify.check_prediction(50_000, np.random.default_rng(4)).passed
    res = verify.check_prediction(100_000, np.random.default_rng(5),
                                  marginals=np.eye(3)[[0, 0, 1]])
    assert res.passed
    assert np.all(np.abs(res.witness["mean_gap"]) <= 0.005)


def test_prediction_one_hot_projection_is_constant():
    res = verify.check_prediction(1000, np.random.default_rng(6), marginals=np.eye(3)[[1, 1]],
                                  gamma=0.5)
    assert res.worst_violation == 0.0


def test_grid_oracle_examples():
    np.testing.assert_allclose(verify.brute_force_projection([2.0, 0.5, 0.0]), [1, 0, 0])
    inside = np.array([0.2, 0.3, 0.5])
    assert np.max(np.abs(verify.brute_force_projection(inside) - inside)) <= 1e-3


def test_grid_oracle_matches_literal_enumeration():
    rng = np.random.default_rng(7)
    for _ in range(20):
        v = rng.uniform(-1, 2, size=int(rng.integers(2, 5)))
        fast = verify.brute_force_projection(v, 0.05)
        slow = verify.enumerate_grid_projection(v, 0.05)
        assert np.sum((fast - v) ** 2) == pytest.approx(np.sum((slow - v) ** 2), abs=1e-12)


def test_grid_oracle_budget():
    with pytest.raises(OracleBudgetError):
        verify.brute_force_projection(np.zeros(5))
    with pytest.raises(OracleBudgetError):
        verify.enumerate_grid_projection(np.zeros(6), 1e-3)


def test_exact_oracle_agrees_on_many_vectors():
    rng = np.random.default_rng(8)
    for k in range(2, 9):
        V = rng.uniform(-3, 3, size=(500, k))
        assert np.max(np.abs(verify.brute_force_projection(V, mode="exact") - project_simplex(V))) <= 1e-9


def test_vertex_minimum_matches_grid_search():
    # the minimum of a linear function over the simplex is attained at a vertex
    rng = np.random.default_rng(9)
    grid = np.array(list(verify._compositions(20, 3))) / 20.0
    for _ in range(1000):
        c = rng.normal(size=3)
        assert min(c) == pytest.approx(np.min(grid @ c), abs=1e-12)


def test_run_all_passes_at_default_seed():
    results = verify.run_all(seed=0, trials=1000, mc_trials=20_000)
    assert all(r.passed for r in results)
    assert {r.lemma_id for r in results} == {
        "lowerbound", "upperbound", "upperbound_real", "equivalence", "expectation", "prediction"}
    assert isinstance(results[0].to_dict()["witness"], dict)
