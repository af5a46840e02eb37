import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from eivkron.covariance import build_covariance
from eivkron.errors import InvalidInput, TooLarge
from eivkron.estimators import (ConicProblem, GramPair, LassoProblem, conic_min_t, corrected_gram, estimate_tau_B,
                                grid_oracle, is_feasible, lasso_objective, solve_conic, solve_lasso)
from eivkron.rng import RngStream
from eivkron.simulate import draw_instance


def gp_of(G, g, f=100):
    G = np.asarray(G, float)
    return GramPair(G, np.asarray(g, float), 0.0, f)


def random_gp(seed, m, indefinite):
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((m, m))
    G = M @ M.T / m
    if indefinite:
        G = G - (np.linalg.eigvalsh(G)[0] + rng.uniform(0.1, 0.6)) * np.eye(m)
    return gp_of(G, rng.standard_normal(m))


# --- Lasso -------------------------------------------------------------------

def test_lasso_soft_threshold_case():
    res = solve_lasso(gp_of(np.eye(2), [1.0, 0.0]), 0.3, 10.0)
    np.testing.assert_allclose(res.beta_hat, [0.7, 0.0], atol=1e-7)
    assert res.objective == pytest.approx(-0.245, abs=1e-9)
    assert res.converged


def test_lasso_zero_gamma():
    res = solve_lasso(gp_of(np.diag([2.0, 1.0]), [0.0, 0.0]), 0.1, 1.0)
    np.testing.assert_array_equal(res.beta_hat, 0)


def test_lasso_indefinite_matches_oracle():
    gp = gp_of([[1.0, 0.0], [0.0, -0.2]], [0.5, 0.1])
    res = solve_lasso(gp, 0.1, 1.0)
    ora = grid_oracle(LassoProblem(gp, 0.1, 1.0))
    assert abs(res.objective - ora.objective) <= 1e-3 + ora.tolerance_used
    assert res.objective <= ora.objective + 1e-9
    assert np.abs(res.beta_hat).sum() <= 1.0 + 1e-8


def test_lasso_radius_zero_and_errors():
    res = solve_lasso(gp_of(np.eye(2), [1.0, 1.0]), 0.1, 0.0)
    assert res.converged and not res.beta_hat.any()
    with pytest.raises(InvalidInput):
        solve_lasso(gp_of(np.eye(2), [1.0, 1.0]), -0.1, 1.0)


def test_lasso_nonconvergence_is_reported():
    res = solve_lasso(random_gp(3, 6, False), 0.01, 5.0, max_iter=1, tol=1e-14)
    assert not res.converged
    assert np.all(np.isfinite(res.beta_hat))


@pytest.mark.invariant
@given(st.integers(1, 3), st.integers(0, 10**6), st.floats(0.0, 1.0), st.floats(0.2, 3.0))
def test_lasso_matches_oracle_on_convex(m, seed, lam, R):
    gp = random_gp(seed, m, False)
    res = solve_lasso(gp, lam, R)
    ora = grid_oracle(LassoProblem(gp, lam, R), resolution=101 if m == 3 else 201)
    assert res.objective <= ora.objective + 1e-3
    assert ora.objective <= res.objective + ora.tolerance_used + 1e-9
    assert np.abs(res.beta_hat).sum() <= R + 1e-8


@pytest.mark.invariant
@given(st.integers(2, 8), st.integers(0, 10**6), st.booleans())
def test_lasso_objective_monotone(m, seed, indefinite):
    gp = random_gp(seed, m, indefinite)
    res = solve_lasso(gp, 0.05, 2.0, return_history=True)
    h = np.array(res.diagnostics["history"])
    assert np.all(np.diff(h) <= 1e-12 * (1 + np.abs(h[:-1])))
    assert lasso_objective(gp, 0.05, res.beta_hat) == pytest.approx(res.objective, abs=1e-12)


# --- conic --------------------------------------------------------------------

def test_conic_zero_gamma():
    res = solve_conic(gp_of(np.eye(2), [0.0, 0.0]), 1.0, 0.1, 0.1)
    np.testing.assert_array_equal(res.beta_hat, 0)
    assert res.t_hat == 0 and res.objective == 0


def test_conic_small_gamma_inside_tau():
    res = solve_conic(gp_of(np.eye(2), [0.05, 0.0]), 1.0, 0.1, 0.1)
    np.testing.assert_array_equal(res.beta_hat, 0)
    assert res.objective == 0


def test_conic_rejects_bad_parameters():
    gp = gp_of(np.eye(2), [1.0, 0.0])
    for lam, mu, tau in ((0.0, 0.1, 0.1), (1.0, 0.0, 0.1), (1.0, 0.1, -1.0)):
        with pytest.raises(InvalidInput):
            solve_conic(gp, lam, mu, tau)


def test_conic_feasibility_helpers():
    gp = gp_of(np.eye(2), [1.0, 0.0])
    t = conic_min_t(gp, 0.5, 0.1, np.zeros(2))
    assert t == pytest.approx((1.0 - 0.1) / 0.5)
    assert is_feasible(gp, 0.5, 0.1, np.zeros(2), t, tol=1e-12)
    assert not is_feasible(gp, 0.5, 0.1, np.zeros(2), 0.5 * t)


@pytest.mark.invariant
@given(st.integers(1, 3), st.integers(0, 10**6), st.booleans(), st.floats(0.2, 2.0), st.floats(0.05, 1.0),
       st.floats(0.0, 0.5))
def test_conic_matches_oracle(m, seed, indefinite, lam, mu, tau):
    gp = random_gp(seed, m, indefinite)
    res = solve_conic(gp, lam, mu, tau)
    ora = grid_oracle(ConicProblem(gp, lam, mu, tau), resolution=101 if m == 3 else 201)
    assert res.converged
    assert res.objective <= ora.objective + 1e-3
    assert ora.objective <= res.objective + ora.tolerance_used + 1e-6
    f = res.feasibility
    assert np.linalg.norm(res.beta_hat) <= res.t_hat + 1e-7
    assert f["infnorm_residual"] <= mu * res.t_hat + tau + 1e-7


def test_conic_large_instance_gap():
    A = build_covariance("ar1", 64, rho=0.3)
    B = build_covariance("identity", 200, scale=0.1)
    inst = draw_instance(A, B, 4, "unit_equal", 1.0, 0.5, "gaussian", RngStream(1))
    gp = corrected_gram(inst.X, inst.y, estimate_tau_B(inst.X, A.trace)[1])
    res = solve_conic(gp, 1.0, 0.3, 0.05)
    assert res.converged
    assert res.diagnostics["duality_gap"] <= 1e-6 * (1 + abs(res.objective))


# --- grid oracle ----------------------------------------------------------------

def test_oracle_examples():
    res = grid_oracle(LassoProblem(gp_of([[1.0]], [1.0]), 0.3, 10.0))
    assert abs(res.beta_hat[0] - 0.7) <= res.diagnostics["spacing"]
    res = grid_oracle(ConicProblem(gp_of(np.eye(2), [0.0, 0.0]), 1.0, 0.1, 0.1))
    np.testing.assert_array_equal(res.beta_hat, 0)
    assert res.t_hat == 0
    with pytest.raises(TooLarge):
        grid_oracle(LassoProblem(gp_of(np.eye(4), np.ones(4)), 0.1, 1.0))


@pytest.mark.parametrize("seed", range(4))
def test_oracle_refinement_self_consistent(seed):
    gp = random_gp(seed, 2, seed % 2 == 1)
    for prob in (LassoProblem(gp, 0.2, 1.5), ConicProblem(gp, 1.0, 0.3, 0.1)):
        coarse = grid_oracle(prob, resolution=201)
        fine = grid_oracle(prob, box_halfwidth=coarse.diagnostics["box_halfwidth"], resolution=801)
        assert abs(coarse.objective - fine.objective) < 4 * coarse.tolerance_used + 1e-12
