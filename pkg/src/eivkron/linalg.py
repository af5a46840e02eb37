"""Dense symmetric linear algebra used by every other module.

Symmetric matrices are plain ``numpy`` arrays; :func:`as_symmetric` is the
single validation point that enforces finiteness and exact symmetry.
"""
from __future__ import annotations

import numpy as np

from .errors import InvalidInput, NotPSD

# relative asymmetry tolerated (and then removed) by as_symmetric
_SYM_RTOL = 1e-10


def as_symmetric(M, name: str = "matrix") -> np.ndarray:
    """Return ``M`` as a float array that is exactly symmetric.

    Round-off asymmetry (relative size below 1e-10) is removed by averaging
    with the transpose; anything larger is rejected.
    """
    M = np.array(M, dtype=float, copy=True)
    if M.ndim == 0:
        M = M.reshape(1, 1)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 1:
        raise InvalidInput(f"{name} must be a non-empty square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise InvalidInput(f"{name} has non-finite entries")
    asym = np.max(np.abs(M - M.T)) if M.size else 0.0
    scale = max(np.max(np.abs(M)), 1.0)
    if asym > _SYM_RTOL * scale:
        raise InvalidInput(f"{name} is not symmetric (max asymmetry {asym:.3g})")
    if asym > 0:
        M = 0.5 * (M + M.T)
    return M


def sym_eig(M) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a symmetric matrix.

    Returns
    -------
    eigenvalues : ndarray
        Sorted in descending order.
    eigenvectors : ndarray
        Orthonormal columns, ``eigenvectors[:, i]`` pairs with ``eigenvalues[i]``.
    """
    M = as_symmetric(M)
    w, V = np.linalg.eigh(M)
    return w[::-1].copy(), V[:, ::-1].copy()


def eigvals_desc(M) -> np.ndarray:
    return np.linalg.eigvalsh(as_symmetric(M))[::-1]


def psd_sqrt(M, tol: float | None = None) -> np.ndarray:
    """Symmetric PSD square root.

    Eigenvalues in ``[-tol, 0)`` are clamped to zero; anything more negative
    raises :class:`NotPSD`. The default ``tol`` is ``1e-10 * ||M||_2``.
    """
    M = as_symmetric(M)
    w, V = np.linalg.eigh(M)
    if tol is None:
        tol = 1e-10 * max(np.max(np.abs(w)), 0.0)
    if w[0] < -tol:
        raise NotPSD(f"smallest eigenvalue {w[0]:.6g} below -{tol:.3g}")
    w = np.clip(w, 0.0, None)
    R = (V * np.sqrt(w)) @ V.T
    return 0.5 * (R + R.T)


def op_norm(M) -> float:
    w = np.linalg.eigvalsh(as_symmetric(M))
    return float(max(abs(w[0]), abs(w[-1])))


def fro_norm(M) -> float:
    M = as_symmetric(M)
    return float(np.sqrt(np.sum(M * M)))


def trace(M) -> float:
    return float(np.trace(as_symmetric(M)))


def lambda_min(M) -> float:
    return float(np.linalg.eigvalsh(as_symmetric(M))[0])


def lambda_max(M) -> float:
    return float(np.linalg.eigvalsh(as_symmetric(M))[-1])
