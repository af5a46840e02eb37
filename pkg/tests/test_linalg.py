import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from eivkron import linalg
from eivkron.errors import InvalidInput, NotPSD
from eivkron.covariance import build_covariance

from conftest import random_sym


def sym_matrices(max_dim=6):
    return st.integers(1, max_dim).flatmap(
        lambda n: arrays(float, (n, n), elements=st.floats(-10, 10, allow_nan=False)).map(lambda a: (a + a.T) / 2))


def test_sym_eig_identity_and_diagonal():
    w, _ = linalg.sym_eig(np.eye(3))
    np.testing.assert_allclose(w, [1, 1, 1])
    w, V = linalg.sym_eig(np.diag([3.0, 1.0, 2.0]))
    np.testing.assert_allclose(w, [3, 2, 1])


def test_sym_eig_reconstruction(rng):
    M = random_sym(rng, 5)
    w, V = linalg.sym_eig(M)
    assert np.all(np.diff(w) <= 0)
    np.testing.assert_allclose(V @ np.diag(w) @ V.T, M, atol=1e-8)
    np.testing.assert_allclose(V.T @ V, np.eye(5), atol=1e-10)
    for i in range(5):
        assert np.linalg.norm(M @ V[:, i] - w[i] * V[:, i]) <= 1e-8 * (1 + linalg.op_norm(M))


def test_sym_eig_rejects_nonfinite():
    with pytest.raises(InvalidInput):
        linalg.sym_eig(np.array([[1.0, np.nan], [np.nan, 1.0]]))


def test_psd_sqrt_examples():
    np.testing.assert_allclose(linalg.psd_sqrt(np.eye(4)), np.eye(4))
    np.testing.assert_allclose(linalg.psd_sqrt(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]), atol=1e-12)
    M = build_covariance("equicorrelation", 3, rho=0.5).matrix
    R = linalg.psd_sqrt(M)
    assert np.linalg.norm(R @ R - M, 2) <= 1e-6 * (1 + linalg.op_norm(M))
    np.testing.assert_array_equal(R, R.T)


def test_psd_sqrt_clamps_tiny_negative_and_rejects_negative():
    M = np.diag([1.0, -1e-14])
    R = linalg.psd_sqrt(M)
    assert np.all(np.linalg.eigvalsh(R) >= 0)
    with pytest.raises(NotPSD):
        linalg.psd_sqrt(np.diag([1.0, -0.1]))


def test_norms_examples():
    M = np.diag([3.0, -1.0])
    assert linalg.op_norm(M) == 3
    assert linalg.fro_norm(M) == pytest.approx(np.sqrt(10))
    assert linalg.trace(M) == 2
    assert linalg.op_norm(np.eye(5)) == 1
    assert linalg.fro_norm(np.eye(5)) == pytest.approx(np.sqrt(5))
    assert linalg.trace(np.eye(5)) == 5


@pytest.mark.invariant
@given(sym_matrices())
def test_trace_equals_eigenvalue_sum(M):
    w, _ = linalg.sym_eig(M)
    assert abs(linalg.trace(M) - w.sum()) <= 1e-8 * M.shape[0] * max(1.0, np.abs(M).max())


@pytest.mark.invariant
@given(sym_matrices())
def test_norm_sandwich(M):
    op, fro = linalg.op_norm(M), linalg.fro_norm(M)
    slack = 1e-9 * (1 + fro)
    assert op <= fro + slack
    assert fro <= np.sqrt(M.shape[0]) * op + slack
    w, _ = linalg.sym_eig(M)
    assert fro ** 2 == pytest.approx(np.sum(w ** 2), rel=1e-8, abs=1e-8)


@pytest.mark.invariant
@given(st.integers(1, 6), st.integers(0, 10**6))
def test_psd_sqrt_squares_back(n, seed):
    M = random_sym(np.random.default_rng(seed), n, psd=True)
    R = linalg.psd_sqrt(M)
    assert np.linalg.norm(R @ R - M, 2) <= 1e-6 * (1 + linalg.op_norm(M))
