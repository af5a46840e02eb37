import math

import numpy as np
import pytest

from eivkron.covariance import build_covariance
from eivkron.errors import InvalidInput
from eivkron.estimators import pilot_residuals, theory_lambda
from eivkron.rng import RngStream


def test_baseline_formula():
    A = build_covariance("identity", 50)
    B = build_covariance("identity", 100, scale=0.5)
    plan = theory_lambda(A, B, 100, 50, 1.0, 0.5, K=1.0, C0=1.0, mode="baseline")
    rate = math.sqrt(math.log(50) / 100)
    assert plan.components["D2"] == pytest.approx(3.0)
    assert plan.psi == pytest.approx(4.5)
    assert plan.lam == pytest.approx(18 * rate)
    assert plan.mu == pytest.approx(2 * 3.0 * rate)
    D0 = math.sqrt(0.5) + 1.0
    assert plan.tau == pytest.approx(D0 * 0.5 * rate)


def test_oracle_formula_and_limit():
    A = build_covariance("identity", 400)
    B = build_covariance("identity", 100, scale=0.04)
    plan = theory_lambda(A, B, 100, 400, 2.0, 0.5, mode="oracle")
    c = plan.components
    assert c["D0_prime"] == pytest.approx(0.2 + 1.0)
    assert c["D_oracle"] == pytest.approx(2 * (1.0 + 0.2))
    assert c["tau_B_plus_half"] == pytest.approx(0.2 + c["D_oracle"] / 20)
    assert plan.psi == pytest.approx(2 * 1.2 * (c["tau_B_plus_half"] * 2.0 + 0.5))
    assert plan.lam == pytest.approx(2 * plan.psi * math.sqrt(math.log(400) / 100))
    # B = 0 and m large: psi tends to 2 C0 D0' K M_eps
    B0 = build_covariance("identity", 100, scale=0.0)
    psis = [theory_lambda(build_covariance("identity", m), B0, 100, m, 1.0, 0.5, mode="oracle").psi
            for m in (10**2, 10**4)]
    target = 2 * 1.0 * 0.5
    assert abs(psis[1] - target) < abs(psis[0] - target)
    assert psis[1] == pytest.approx(target, rel=0.05)


def test_oracle_mu_uses_tau_hat():
    A = build_covariance("identity", 64)
    B = build_covariance("identity", 100, scale=0.01)
    p1 = theory_lambda(A, B, 100, 64, 1.0, 0.5, mode="oracle", tau_B_hat=0.01)
    p2 = theory_lambda(A, B, 100, 64, 1.0, 0.5, mode="oracle", tau_B_hat=0.5)
    assert p1.mu < p2.mu
    assert p1.lam == p2.lam


def test_oracle_smaller_than_baseline_at_small_tau_B():
    A = build_covariance("identity", 128)
    B = build_covariance("identity", 400, scale=0.01)
    base = theory_lambda(A, B, 400, 128, 1.0, 0.5, mode="baseline")
    ora = theory_lambda(A, B, 400, 128, 1.0, 0.5, mode="oracle")
    assert ora.lam < base.lam


def test_input_errors():
    A = build_covariance("identity", 5)
    B = build_covariance("identity", 1)
    with pytest.raises(InvalidInput):
        theory_lambda(A, B, 1, 5, 1.0, 0.5)
    with pytest.raises(InvalidInput):
        theory_lambda(A, build_covariance("identity", 10), 10, 5, 1.0, 0.5, mode="empirical")


def test_empirical_is_reproducible_and_calibrated():
    A = build_covariance("ar1", 20, rho=0.3)
    B = build_covariance("identity", 100, scale=0.1)
    st = RngStream(99, ("pilot-test",))
    r1 = pilot_residuals(A, B, 3, "unit_equal", 1.0, 0.5, "gaussian", st, n_trials=200)
    r2 = pilot_residuals(A, B, 3, "unit_equal", 1.0, 0.5, "gaussian", st, n_trials=200)
    np.testing.assert_array_equal(r1, r2)
    plan = theory_lambda(A, B, 100, 20, 1.0, 0.5, mode="empirical", pilot_residuals=r1)
    assert plan.lam == 2 * np.quantile(r1, 0.95)
    base = theory_lambda(A, B, 100, 20, 1.0, 0.5, mode="baseline")
    assert plan.mu / plan.tau == pytest.approx(base.mu / base.tau)
    assert plan.mu * 1.0 + plan.tau == pytest.approx(np.quantile(r1, 0.99))
    # fresh evaluation draws satisfy the precondition about 95% of the time
    fresh = pilot_residuals(A, B, 3, "unit_equal", 1.0, 0.5, "gaussian", RngStream(7), n_trials=200)
    assert np.mean(fresh <= plan.lam / 2) >= 0.9
