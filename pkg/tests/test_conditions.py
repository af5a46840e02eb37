import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from eivkron.conditions import (SearchConfig, Status, check_lower_re, check_upper_re, cone_ladder, delta_sup_norm,
                                deterministic_re_transfer, lower_re_margin, lq_sensitivity, lre_to_re, re_constant,
                                re_to_lre, sparse_eig, upper_re_margin)
from eivkron.covariance import build_covariance
from eivkron.errors import DegenerateA, InvalidInput
from eivkron.estimators import gram_from_data
from eivkron.rng import RngStream
from eivkron.simulate import sample_design

from conftest import random_sym


# --- sparse eigenvalues --------------------------------------------------------------

def test_sparse_eig_examples():
    r = sparse_eig(np.diag([1.0, 2.0, 3.0]), 1)
    assert (r.rho_min, r.rho_max, r.exact) == (1.0, 3.0, True)
    r = sparse_eig(np.eye(5), 3)
    assert r.rho_min == pytest.approx(1) and r.rho_max == pytest.approx(1)
    with pytest.raises(InvalidInput):
        sparse_eig(np.eye(3), 4)


def test_sparse_eig_enumeration_vs_sampled(rng):
    M = random_sym(rng, 6, psd=True)
    exact = sparse_eig(M, 2)
    brute = [np.linalg.eigvalsh(M[np.ix_(J, J)]) for J in itertools.combinations(range(6), 2)]
    assert exact.n_supports == 15
    assert exact.rho_min == pytest.approx(min(w[0] for w in brute))
    assert exact.rho_max == pytest.approx(max(w[-1] for w in brute))
    approx = sparse_eig(M, 2, budget=5)
    assert not approx.exact
    assert approx.rho_max <= exact.rho_max + 1e-12
    assert approx.rho_min >= exact.rho_min - 1e-12


def test_sparse_eig_mapnorm():
    R = np.array([[1.0, 1.0], [0.0, 1.0], [0.0, 0.0]])
    r = sparse_eig(R, 2, mode="mapnorm")
    s = np.linalg.svd(R, compute_uv=False)
    assert r.rho_max == pytest.approx(s[0] ** 2) and r.rho_min == pytest.approx(s[-1] ** 2)


@pytest.mark.invariant
@given(st.integers(1, 7), st.integers(0, 10**6))
def test_sparse_eig_full_support(n, seed):
    M = random_sym(np.random.default_rng(seed), n)
    r = sparse_eig(M, n)
    w = np.linalg.eigvalsh(M)
    assert abs(r.rho_min - w[0]) <= 1e-8 and abs(r.rho_max - w[-1]) <= 1e-8


# --- Lower/Upper-RE ----------------------------------------------------------------------

def test_lower_re_examples():
    c = check_lower_re(np.eye(3), 1.0, 0.0)
    assert c.verified
    c = check_lower_re(-np.eye(3), 0.1, 0.0)
    assert c.status is Status.FALSIFIED
    assert lower_re_margin(-np.eye(3), 0.1, 0.0, c.witness) < 0


def test_upper_re_examples():
    assert check_upper_re(np.eye(3), 1.0, 0.0).verified
    c = check_upper_re(2 * np.eye(3), 1.0, 0.0)
    assert c.falsified
    assert upper_re_margin(2 * np.eye(3), 1.0, 0.0, c.witness) < 0


def test_falsified_witness_recheckable(rng):
    G = random_sym(rng, 16)
    c = check_lower_re(G, 1.0, 0.01, SearchConfig(n_random=200, n_sparse_dirs=200))
    assert c.falsified
    th = c.witness
    lhs = th @ G @ th
    rhs = 1.0 * th @ th - 0.01 * np.abs(th).sum() ** 2
    assert lhs - rhs < -1e-9 * np.linalg.norm(G, 2)


def test_sampled_status_for_large_dimension():
    G = random_sym(np.random.default_rng(0), 30, psd=True) + 0.05 * np.eye(30)
    lam = np.linalg.eigvalsh(G)[0]
    # alpha just above lambda_min; the l1 slack rescues the dense bottom directions
    c = check_lower_re(G, lam + 0.02, 0.01, SearchConfig(n_random=100, n_sparse_dirs=100))
    assert c.status is Status.VERIFIED_SAMPLED and c.n_samples > 0


def test_lower_re_simulated_regime():
    A = build_covariance("ar1", 12, rho=0.3)
    B = build_covariance("identity", 400, scale=0.1)
    alpha = A.eigenvalues[0] / 2
    ok = 0
    for t in range(20):
        X0, W = sample_design(A, B, "gaussian", RngStream(3, ("lre", t)))
        gp = gram_from_data(X0 + W, np.zeros(400), A.trace)
        ok += check_lower_re(gp.Gamma_hat, alpha, alpha / 32).verified
        ok += check_upper_re(gp.Gamma_hat, 1.5 * A.eigenvalues[-1], alpha / 32).verified
    assert ok >= 36


def test_lre_to_re_examples():
    assert lre_to_re(1.0, 0.0, 3, 2.0) == (pytest.approx(math.sqrt(0.5)), True)
    assert lre_to_re(1.0, 1.0, 1, 1.0)[1] is False


def test_re_to_lre_examples():
    alpha, tau, s0 = re_to_lre(1.0, 1.0, 1.0)
    assert (alpha, tau, s0) == (0.5, 0.0, 4)
    assert re_to_lre(1.0, 1.0, 0.0)[1] == pytest.approx(0.5)


def test_re_constant_examples():
    assert re_constant(np.eye(4), 2, 1.0).K_est == pytest.approx(1.0, abs=1e-9)
    assert re_constant(3 * np.eye(4), 2, 1.0).K_est == pytest.approx(1 / 3, abs=1e-9)
    est = re_constant(np.diag([2.0, 1.0, 1.0]), 1, 1.0)
    # dense sampling oracle (> 10^6 draws in total) over the cone ||v_Jc||_1 <= ||v_J||_1, |J| = 1
    rng = np.random.default_rng(0)
    R = np.diag([2.0, 1.0, 1.0])
    best = np.inf
    for j in range(3):
        V = rng.standard_normal((350_000, 3))
        Jc = [i for i in range(3) if i != j]
        l1 = np.abs(V[:, Jc]).sum(1)
        keep = l1 <= np.abs(V[:, j])
        V = V[keep]
        best = min(best, np.min(np.linalg.norm(V @ R.T, axis=1) / np.abs(V[:, j])))
    assert est.inv_K <= best + 1e-9
    assert est.K_est == pytest.approx(1 / best, rel=0.05)


@pytest.mark.invariant
@pytest.mark.parametrize("seed", range(6))
def test_lre_implies_re_bound(seed):
    rng = np.random.default_rng(seed)
    Ahalf = rng.standard_normal((8, 5)) / np.sqrt(8) + np.eye(8, 5)
    G = Ahalf.T @ Ahalf
    alpha = np.linalg.eigvalsh(G)[0] * 0.9
    s0, k0 = 2, 1.0
    tau = alpha / (2 * (1 + k0) ** 2 * s0)
    cert = check_lower_re(G, alpha, tau)
    assert cert.verified
    bound, valid = lre_to_re(alpha, tau, s0, k0)
    assert valid
    # every sampled cone vector respects the ratio bound
    for J in itertools.combinations(range(5), s0):
        J = list(J)
        Jc = [i for i in range(5) if i not in J]
        V = rng.standard_normal((4000, 5))
        scale = rng.uniform(0, 1, (4000, 1)) * k0 * np.abs(V[:, J]).sum(1, keepdims=True)
        V[:, Jc] *= scale / np.abs(V[:, Jc]).sum(1, keepdims=True)
        ratio = np.linalg.norm(V @ Ahalf.T, axis=1) / np.linalg.norm(V[:, J], axis=1)
        assert ratio.min() >= bound - 1e-9
    est = re_constant(Ahalf, s0, k0)
    assert est.inv_K >= bound - 0.02


@pytest.mark.invariant
@pytest.mark.parametrize("seed", range(5))
def test_re_to_lre_never_falsified(seed):
    rng = np.random.default_rng(100 + seed)
    R = rng.standard_normal((6, 4)) / np.sqrt(6) + np.eye(6, 4)
    est = re_constant(R, 4, 3.0)
    G = R.T @ R
    alpha, tau, s0 = re_to_lre(est.K_est, 1.0, np.linalg.eigvalsh(G)[0])
    assert s0 == 4
    assert check_lower_re(G, alpha, tau).verified


# --- l_q sensitivity -------------------------------------------------------------------

def test_lq_examples():
    c = lq_sensitivity(np.eye(3), 1, 1.0, 1.0, n_samples=4000)
    assert c.params["kappa_q"] == pytest.approx(0.5, rel=0.02)
    c = lq_sensitivity(np.eye(3), 1, 2 ** -30, 1.0, n_samples=500)
    assert c.params["kappa_q"] == pytest.approx(1.0, abs=1e-6)
    assert lq_sensitivity(np.zeros((3, 3)), 1, 1.0, 1.5, n_samples=100).params["kappa_q"] == 0
    with pytest.raises(InvalidInput):
        lq_sensitivity(np.eye(3), 1, 1.0, 3.0)


def test_cone_ladder_nested():
    small, big = set(cone_ladder(1.0)), set(cone_ladder(2.0))
    assert small <= big
    assert cone_ladder(0.0).tolist() == [0.0]


@pytest.mark.invariant
@pytest.mark.parametrize("seed", range(3))
def test_lq_monotone(seed):
    Psi = random_sym(np.random.default_rng(seed), 5, psd=True)
    st_ = RngStream(seed, ("kappa",))
    vals_k = [lq_sensitivity(Psi, 2, k0, 1.5, 300, stream=st_).params["kappa_q"] for k0 in (0.25, 0.5, 1.0, 2.0)]
    assert all(b <= a + 1e-15 for a, b in zip(vals_k, vals_k[1:]))
    vals_d = [lq_sensitivity(Psi, d0, 1.0, 1.5, 300, stream=st_).params["kappa_q"] for d0 in (1, 2, 3)]
    assert all(b <= a + 1e-15 for a, b in zip(vals_d, vals_d[1:]))


# --- RE transfer ------------------------------------------------------------------------

def test_delta_sup_norm_examples(rng):
    assert delta_sup_norm(np.zeros((4, 4)), 1) == (0.0, True)
    v, exact = delta_sup_norm(np.diag([0.3, -0.5]), 1)
    assert v == pytest.approx(0.5) and exact
    M = random_sym(rng, 8)
    assert delta_sup_norm(M, 8)[0] == pytest.approx(np.linalg.norm(M, 2))
    v, exact = delta_sup_norm(random_sym(rng, 30), 3, budget=100)
    assert not exact


@pytest.mark.invariant
@given(st.integers(0, 10**6))
def test_delta_sup_norm_monotone(seed):
    M = random_sym(np.random.default_rng(seed), 7)
    vals = [delta_sup_norm(M, z)[0] for z in range(1, 8)]
    assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))


def test_transfer_examples():
    r = deterministic_re_transfer(build_covariance("identity", 6), 0.0, 2)
    assert r.accepted and (r.alpha, r.alpha_bar, r.tau) == (0.5, 1.5, 0.25)
    A = np.diag([0.4, 1.0, 2.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0])
    r = deterministic_re_transfer(A, 0.05, 4)
    assert r.accepted
    assert (r.alpha, r.alpha_bar, r.tau) == (pytest.approx(0.2), pytest.approx(3.0), pytest.approx(0.05))
    assert not deterministic_re_transfer(A, 0.2, 4).accepted
    with pytest.raises(DegenerateA):
        deterministic_re_transfer(np.diag([1.0, 0.0]), 0.0, 1)


@pytest.mark.invariant
def test_transfer_soundness_small():
    A = build_covariance("identity", 8)
    B = build_covariance("identity", 600, scale=0.1)
    accepted = 0
    for t in range(40):
        X0, W = sample_design(A, B, "gaussian", RngStream(21, ("tr", t)))
        G = gram_from_data(X0 + W, np.zeros(600), A.trace).Gamma_hat
        for zeta in (1, 2):
            delta, exact = delta_sup_norm(G - A.matrix, zeta)
            r = deterministic_re_transfer(A, delta, zeta)
            if r.accepted and exact:
                accepted += 1
                assert not check_lower_re(G, r.alpha, r.tau).falsified
                assert not check_upper_re(G, r.alpha_bar, r.tau).falsified
    assert accepted > 20
