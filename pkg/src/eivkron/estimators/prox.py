"""Soft thresholding and exact Euclidean projection onto the l1 ball."""
from __future__ import annotations

import numpy as np


def soft_threshold(x, t: float) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


def project_l1_ball(v, radius: float) -> np.ndarray:
    """Euclidean projection of ``v`` onto ``{x : ||x||_1 <= radius}``.

    Sort-based simplex projection (Duchi et al. 2008) applied to ``|v|``.
    """
    v = np.asarray(v, dtype=float)
    if radius < 0:
        raise ValueError("radius must be >= 0")
    a = np.abs(v)
    if a.sum() <= radius:
        return v.copy()
    if radius == 0:
        return np.zeros_like(v)
    u = np.sort(a)[::-1]
    css = np.cumsum(u)
    k = np.arange(1, u.size + 1)
    cond = u - (css - radius) / k > 0
    rho = k[cond][-1]
    theta = (css[rho - 1] - radius) / rho
    return np.sign(v) * np.maximum(a - theta, 0.0)


def prox_l1_ball(v, t: float, radius: float) -> np.ndarray:
    """Prox of ``t ||.||_1`` plus the indicator of the l1 ball of ``radius``.

    Both pieces are soft thresholds, so the composite prox is the threshold
    at ``t`` followed by the ball projection.
    """
    return project_l1_ball(soft_threshold(v, t), radius)
