"""Bias-corrected gram surrogates built from the noisy design."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidInput


@dataclass(frozen=True, eq=False)
class GramPair:
    """``Gamma_hat = X^T X / f - tau_B_hat I`` and ``gamma_hat = X^T y / f``."""

    Gamma_hat: np.ndarray
    gamma_hat: np.ndarray
    tau_B_hat: float
    f: int

    @property
    def m(self) -> int:
        return self.gamma_hat.shape[0]


def estimate_tau_B(X, trace_A: float) -> tuple[float, float]:
    """Return ``(tr_B_hat, tau_B_hat)`` with ``tr_B_hat = (||X||_F^2 - f tr(A))_+ / m``."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise InvalidInput("X must be a 2-d array")
    if not trace_A > 0:
        raise InvalidInput("trace_A must be positive")
    f, m = X.shape
    fro2 = float(np.sum(X * X))
    tr_B = max(0.0, (fro2 - f * trace_A) / m)
    return tr_B, tr_B / f


def corrected_gram(X, y, tau_B_hat: float) -> GramPair:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    if X.ndim != 2 or y.shape[0] != X.shape[0]:
        raise InvalidInput(f"X {X.shape} and y {y.shape} are inconsistent")
    if tau_B_hat < 0:
        raise InvalidInput("tau_B_hat must be >= 0")
    f, m = X.shape
    G = X.T @ X / f
    G = 0.5 * (G + G.T)
    G[np.diag_indices(m)] -= tau_B_hat
    return GramPair(G, X.T @ y / f, float(tau_B_hat), f)


def gram_from_data(X, y, trace_A: float) -> GramPair:
    """Estimate ``tau_B`` and build the corrected pair in one go."""
    _, tau = estimate_tau_B(X, trace_A)
    return corrected_gram(X, y, tau)


def residual_infnorm(gp: GramPair, beta) -> float:
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (gp.m,):
        raise InvalidInput(f"beta must have length {gp.m}")
    return float(np.max(np.abs(gp.gamma_hat - gp.Gamma_hat @ beta))) if gp.m else 0.0


def residual_infnorm_from_data(X, y, beta, tau_B_hat: float) -> float:
    """Same quantity as :func:`residual_infnorm` without forming the m x m gram."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    beta = np.asarray(beta, dtype=float)
    f = X.shape[0]
    r = X.T @ (y - X @ beta) / f + tau_B_hat * beta
    return float(np.max(np.abs(r)))
