"""Exhaustive grid reference solver for tiny (m <= 3) problems."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import InvalidInput, TooLarge
from .gram import GramPair
from .result import SolveResult, feasibility_summary

ORACLE_MAX_DIM = 3


@dataclass(frozen=True)
class LassoProblem:
    gp: GramPair
    lam: float
    radius: float


@dataclass(frozen=True)
class ConicProblem:
    gp: GramPair
    lam: float
    mu: float
    tau: float


def _axis(h: float, resolution: int) -> np.ndarray:
    return np.linspace(-h, h, resolution)


def _iter_chunks(m: int, axis: np.ndarray):
    """Yield ``(offset, points)`` blocks of the C-ordered product grid."""
    rest = [axis] * (m - 1)
    tail = np.stack(np.meshgrid(*rest, indexing="ij"), -1).reshape(-1, m - 1) if m > 1 else np.empty((1, 0))
    for i, a in enumerate(axis):
        pts = np.column_stack([np.full(tail.shape[0], a), tail])
        yield i * tail.shape[0], pts


def _argmin_first(vals: np.ndarray) -> int:
    # np.argmin returns the first minimal index, i.e. the lexicographically
    # smallest point in C order among ties
    return int(np.argmin(vals))


def grid_oracle(problem, box_halfwidth: float | None = None, resolution: int = 201) -> SolveResult:
    """Best grid point over ``[-h, h]^m`` for a Lasso or conic problem.

    For the conic problem ``t`` is minimized out exactly: at fixed ``beta``
    the optimal ``t`` is ``max(||beta||_2, (||g - G beta||_inf - tau) / mu, 0)``,
    so only ``beta`` is gridded. ``diagnostics["spacing_bound"]`` bounds the
    gap between the grid optimum and the true optimum over the box.
    """
    gp = problem.gp
    m = gp.m
    if m > ORACLE_MAX_DIM:
        raise TooLarge(f"grid oracle supports m <= {ORACLE_MAX_DIM}, got {m}")
    if resolution < 2:
        raise InvalidInput("resolution must be >= 2")
    G, g = gp.Gamma_hat, gp.gamma_hat
    Gnorm = float(np.max(np.abs(np.linalg.eigvalsh(G)))) if m else 0.0

    if isinstance(problem, LassoProblem):
        h = problem.radius if box_halfwidth is None else float(box_halfwidth)
        h = min(h, problem.radius)
    elif isinstance(problem, ConicProblem):
        ginf = float(np.max(np.abs(g)))
        # the objective at (0, t_min(0)) bounds ||beta||_1 of any optimum
        f0 = problem.lam * max(0.0, (ginf - problem.tau) / problem.mu)
        h = f0 if box_halfwidth is None else float(box_halfwidth)
    else:
        raise InvalidInput("problem must be a LassoProblem or ConicProblem")

    axis = _axis(h, resolution)
    if h == 0:
        axis = np.zeros(1)
    spacing = float(axis[1] - axis[0]) if axis.size > 1 else 0.0

    best_val, best_pt, best_t = math.inf, None, None
    for _, pts in _iter_chunks(m, axis):
        if isinstance(problem, LassoProblem):
            l1 = np.abs(pts).sum(1)
            vals = 0.5 * np.einsum("ij,jk,ik->i", pts, G, pts) - pts @ g + problem.lam * l1
            vals = np.where(l1 <= problem.radius * (1 + 1e-12), vals, np.inf)
            ts = None
        else:
            r = np.max(np.abs(g[None, :] - pts @ G), axis=1)
            ts = np.maximum.reduce([np.linalg.norm(pts, axis=1), (r - problem.tau) / problem.mu,
                                    np.zeros(pts.shape[0])])
            vals = np.abs(pts).sum(1) + problem.lam * ts
        k = _argmin_first(vals)
        if vals[k] < best_val:
            best_val, best_pt = float(vals[k]), pts[k].copy()
            best_t = None if ts is None else float(ts[k])

    # any optimum in the box has a grid point within spacing/2 per coordinate
    delta = 0.5 * spacing * math.sqrt(m)
    if isinstance(problem, LassoProblem):
        # shrinking a boundary optimum by m*spacing/(2R) makes room for rounding
        # to the grid inside the ball, at extra l2 distance <= m*spacing/2
        delta += 0.5 * m * spacing
        lip = Gnorm * h * math.sqrt(m) + float(np.linalg.norm(g)) + problem.lam * math.sqrt(m)
        bound = lip * delta + 0.5 * Gnorm * delta ** 2
    else:
        # t*(beta) is Lipschitz with constant max(1, ||G||_inf->inf / mu)
        row = float(np.max(np.abs(G).sum(1))) if m else 0.0
        bound = (math.sqrt(m) + problem.lam * max(1.0, row / problem.mu)) * delta
    feas = feasibility_summary(gp, best_pt)
    return SolveResult(best_pt, best_val, feas, int(axis.size ** m), True, bound, t_hat=best_t,
                       diagnostics={"spacing": spacing, "spacing_bound": bound, "box_halfwidth": h,
                                    "resolution": int(axis.size)})
