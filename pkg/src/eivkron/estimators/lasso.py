"""l1-ball constrained, l1-penalized least squares on the corrected gram.

The objective ``0.5 b'Gb - <g, b> + lam ||b||_1`` is nonconvex when the
corrected gram ``G`` is indefinite; the ball ``||b||_1 <= R`` keeps it
bounded. Solved by proximal (composite) gradient descent with a backtracking
Lipschitz estimate, which decreases the objective monotonically.
"""
from __future__ import annotations

import numpy as np

from ..errors import InvalidInput
from .gram import GramPair
from .prox import prox_l1_ball
from .result import SolveResult, feasibility_summary

# below this dimension an indefinite problem is solved from several starts
MULTISTART_MAX_DIM = 10


def lasso_objective(gp: GramPair, lam: float, beta) -> float:
    beta = np.asarray(beta, dtype=float)
    return float(0.5 * beta @ gp.Gamma_hat @ beta - gp.gamma_hat @ beta + lam * np.sum(np.abs(beta)))


def _pgd(G, g, lam, R, beta, L0, max_iter, tol, step_rule, history):
    grad = G @ beta - g
    obj = 0.5 * beta @ (grad - g) + lam * np.abs(beta).sum()
    L = L0
    if history is not None:
        history.append(obj)
    stat = np.inf
    for it in range(1, max_iter + 1):
        if step_rule == "backtracking":
            L = max(L * 0.8, 1e-12)
        while True:
            new = prox_l1_ball(beta - grad / L, lam / L, R)
            step = new - beta
            Gstep = G @ step
            curv = step @ Gstep
            sq = step @ step
            if step_rule != "backtracking" or curv <= L * sq * (1 + 1e-12) or sq == 0:
                break
            L *= 2.0
        beta = new
        grad = grad + Gstep
        obj = 0.5 * beta @ (grad - g) + lam * np.abs(beta).sum()
        if history is not None:
            history.append(obj)
        stat = L * np.sqrt(sq)
        if stat <= tol:
            return beta, obj, it, True, stat
    return beta, obj, max_iter, False, stat


def solve_lasso(gp: GramPair, lam: float, radius: float, *, max_iter: int = 50_000, tol: float = 1e-7,
                step_rule: str = "backtracking", beta0=None, starts: str | int = "auto",
                seed: int = 0, return_history: bool = False) -> SolveResult:
    """Minimize the corrected Lasso objective over the l1 ball of ``radius``.

    Parameters
    ----------
    gp : GramPair
    lam : float
        Penalty weight, ``>= 0``.
    radius : float
        l1 radius ``R = b0 sqrt(d)``; ``R = 0`` (i.e. ``d = 0``) admits only zero.
    step_rule : {"backtracking", "fixed"}
        ``fixed`` uses ``1/||G||_2`` throughout.
    starts : "auto" or int
        ``"auto"`` runs extra starts (ball vertices, the most negative
        curvature direction and a few seeded random points) only when
        ``G`` is indefinite and ``m <= 10``; an int forces that many random
        extra starts.

    Returns
    -------
    SolveResult
        ``diagnostics["stationarity"]`` is the norm of the final gradient
        mapping; ``converged`` is false (with the best iterate returned) when
        ``max_iter`` is exhausted.
    """
    if lam < 0:
        raise InvalidInput("lambda must be >= 0")
    if not radius >= 0:
        raise InvalidInput("radius must be >= 0")
    if step_rule not in ("backtracking", "fixed"):
        raise InvalidInput(f"unknown step rule {step_rule!r}")
    G, g = gp.Gamma_hat, gp.gamma_hat
    m = g.shape[0]
    if radius == 0:
        beta = np.zeros(m)
        return SolveResult(beta_hat=beta, objective=0.0, feasibility=feasibility_summary(gp, beta),
                           iterations=0, converged=True, tolerance_used=tol,
                           diagnostics={"stationarity": 0.0, "n_starts": 0, "total_iterations": 0,
                                        "lambda": float(lam), "radius": 0.0, "indefinite": False})
    w, V = np.linalg.eigh(G)
    L0 = max(abs(w[0]), abs(w[-1]), 1e-12)

    inits = [np.zeros(m) if beta0 is None else prox_l1_ball(np.asarray(beta0, float), 0.0, radius)]
    indefinite = w[0] < 0
    if starts == "auto":
        extra = indefinite and m <= MULTISTART_MAX_DIM
        n_random = 4 if extra else 0
    else:
        extra = True
        n_random = int(starts)
    if extra:
        for i in range(m):
            for s in (1.0, -1.0):
                e = np.zeros(m)
                e[i] = s * radius
                inits.append(e)
        v = V[:, 0]
        for s in (1.0, -1.0):
            inits.append(s * radius * v / np.abs(v).sum())
        rng = np.random.default_rng(seed)
        for _ in range(n_random):
            z = rng.standard_normal(m)
            inits.append(radius * rng.uniform() * z / np.abs(z).sum())

    history = [] if return_history else None
    best = None
    total_iter = 0
    for k, b in enumerate(inits):
        res = _pgd(G, g, lam, radius, b.copy(), L0, max_iter, tol, step_rule, history if k == 0 else None)
        total_iter += res[2]
        if best is None or res[1] < best[1] - 1e-15:
            best = res
    beta, obj, it, conv, stat = best
    diagnostics = {"stationarity": float(stat), "n_starts": len(inits), "total_iterations": total_iter,
                   "lambda": float(lam), "radius": float(radius), "indefinite": bool(indefinite)}
    if return_history:
        diagnostics["history"] = history
    return SolveResult(beta_hat=beta, objective=float(obj), feasibility=feasibility_summary(gp, beta),
                       iterations=it, converged=conv, tolerance_used=tol, diagnostics=diagnostics)
