"""Sparse operator norm of a perturbation and the deterministic RE transfer."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from ..covariance import CovarianceModel
from ..errors import DegenerateA, InvalidInput
from ..rng import as_generator

_CHUNK = 2048


def delta_sup_norm(Delta, zeta: int, budget: int = 10**5, n_random: int = 5000,
                   seed: int = 0) -> tuple[float, bool]:
    """``sup |u' Delta v|`` over unit ``u, v`` supported on at most ``zeta`` coordinates.

    Equals the largest spectral norm of a ``zeta x zeta`` submatrix
    ``Delta[J, J']`` (smaller supports are sub-blocks of these). Exact when the
    ``C(m, zeta)^2`` pairs fit in ``budget``; otherwise a lower bound from
    random and greedy pairs. ``zeta >= m`` gives the full operator norm.
    """
    D = np.asarray(Delta, dtype=float)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise InvalidInput("Delta must be square")
    m = D.shape[0]
    if zeta < 1:
        raise InvalidInput("zeta must be >= 1")
    z = min(int(zeta), m)
    if z == m:
        return float(np.linalg.norm(D, 2)), True
    n_sets = math.comb(m, z)
    if n_sets ** 2 <= budget:
        sets = np.array(list(itertools.combinations(range(m), z)), dtype=np.intp)
        best = 0.0
        for i in range(0, sets.shape[0], max(1, _CHUNK // sets.shape[0])):
            rows = sets[i:i + max(1, _CHUNK // sets.shape[0])]
            sub = D[rows[:, None, :, None], sets[None, :, None, :]]
            sv = np.linalg.svd(sub.reshape(-1, z, z), compute_uv=False)
            best = max(best, float(sv[:, 0].max()))
        return best, True
    rng = as_generator(seed)
    rows = np.array([np.sort(rng.choice(m, size=z, replace=False)) for _ in range(n_random)])
    cols = np.array([np.sort(rng.choice(m, size=z, replace=False)) for _ in range(n_random)])
    # greedy pairs seeded by the largest entries
    flat = np.argsort(np.abs(D), axis=None)[::-1][:64]
    greedy_r, greedy_c = [], []
    for idx in flat:
        i, j = divmod(int(idx), m)
        r = [i] + [k for k in np.argsort(-np.abs(D[:, j])) if k != i][: z - 1]
        c = [j] + [k for k in np.argsort(-np.abs(D[i, :])) if k != j][: z - 1]
        greedy_r.append(sorted(r))
        greedy_c.append(sorted(c))
    rows = np.vstack([rows, np.array(greedy_r, dtype=np.intp)])
    cols = np.vstack([cols, np.array(greedy_c, dtype=np.intp)])
    sub = D[rows[:, :, None], cols[:, None, :]]
    return float(np.linalg.svd(sub, compute_uv=False)[:, 0].max()), False


@dataclass(frozen=True)
class TransferResult:
    accepted: bool
    alpha: float
    alpha_bar: float
    tau: float
    margin: float


def deterministic_re_transfer(A: CovarianceModel | np.ndarray, delta: float, zeta: int) -> TransferResult:
    """Lower/Upper-RE parameters for ``A + Delta`` given a sparse bound ``delta`` on ``Delta``.

    Accepted when ``delta <= lambda_min(A) / 8``, giving ``alpha = lambda_min / 2``,
    ``alpha_bar = 3 lambda_max / 2`` and ``tau = lambda_min / (2 zeta)``.
    ``margin = lambda_min / 8 - delta`` is reported either way.
    """
    if delta < 0 or zeta < 1:
        raise InvalidInput("need delta >= 0 and zeta >= 1")
    w = A.eigenvalues if isinstance(A, CovarianceModel) else np.linalg.eigvalsh(np.asarray(A, float))
    lmin, lmax = float(w[0]), float(w[-1])
    if lmin <= 0:
        raise DegenerateA(f"lambda_min(A) = {lmin:.3g}")
    margin = lmin / 8 - delta
    return TransferResult(margin >= 0, lmin / 2, 1.5 * lmax, lmin / (2 * zeta), margin)
