"""Conic-programming (compensated matrix-uncertainty) estimator.

Solves ``min ||b||_1 + lam t`` over ``||g - G b||_inf <= mu t + tau`` and
``||b||_2 <= t`` with a primal log-barrier interior-point method on the
variables ``(b, u, t)`` where ``u >= |b|`` carries the l1 norm. The barrier
parameter of the problem is ``nu = 4 m + 2`` so that at the end of each
centering step the objective is within ``nu / kappa`` of the optimum; this
gap is reported as the optimality certificate.
"""
from __future__ import annotations

import math

import numpy as np
from scipy import linalg as sla

from ..errors import InvalidInput
from .gram import GramPair
from .result import SolveResult, feasibility_summary


def conic_objective(lam: float, beta, t: float) -> float:
    return float(np.sum(np.abs(beta)) + lam * t)


def conic_min_t(gp: GramPair, mu: float, tau: float, beta) -> float:
    """Smallest ``t`` making ``(beta, t)`` feasible."""
    beta = np.asarray(beta, dtype=float)
    r = float(np.max(np.abs(gp.gamma_hat - gp.Gamma_hat @ beta))) if beta.size else 0.0
    return max(float(np.linalg.norm(beta)), (r - tau) / mu, 0.0)


def is_feasible(gp: GramPair, mu: float, tau: float, beta, t: float, tol: float = 0.0) -> bool:
    beta = np.asarray(beta, dtype=float)
    r = float(np.max(np.abs(gp.gamma_hat - gp.Gamma_hat @ beta)))
    return bool(np.linalg.norm(beta) <= t + tol and r <= mu * t + tau + tol)


class _Barrier:
    def __init__(self, G, g, lam, mu, tau):
        self.G, self.g, self.lam, self.mu, self.tau = G, g, lam, mu, tau
        self.m = g.shape[0]

    def slacks(self, beta, u, t):
        r = self.g - self.G @ beta
        base = self.mu * t + self.tau
        return u - beta, u + beta, base - r, base + r, t * t - beta @ beta

    def feasible(self, beta, u, t):
        sa, sb, sp, sn, q = self.slacks(beta, u, t)
        return t > 0 and q > 0 and sa.min() > 0 and sb.min() > 0 and sp.min() > 0 and sn.min() > 0

    def value(self, kappa, beta, u, t):
        sa, sb, sp, sn, q = self.slacks(beta, u, t)
        if t <= 0 or q <= 0 or sa.min() <= 0 or sb.min() <= 0 or sp.min() <= 0 or sn.min() <= 0:
            return math.inf
        return (kappa * (u.sum() + self.lam * t) - np.log(sa).sum() - np.log(sb).sum()
                - np.log(sp).sum() - np.log(sn).sum() - math.log(q))

    def newton(self, kappa, beta, u, t):
        G, mu = self.G, self.mu
        sa, sb, sp, sn, q = self.slacks(beta, u, t)
        ia, ib, ip, iN = 1 / sa, 1 / sb, 1 / sp, 1 / sn
        g_beta = ia - ib - G @ (ip - iN) + 2 * beta / q
        g_u = kappa - ia - ib
        g_t = kappa * self.lam - mu * (ip.sum() + iN.sum()) - 2 * t / q

        D1 = ia ** 2 + ib ** 2
        D2 = ib ** 2 - ia ** 2
        dp, dn = ip ** 2, iN ** 2
        # u eliminated analytically: D1 - D2^2 / D1 == 4 / (sa^2 + sb^2)
        H = (G * (dp + dn)) @ G
        H[np.diag_indices(self.m)] += 4.0 / (sa ** 2 + sb ** 2) + 2.0 / q
        H += (4.0 / q ** 2) * np.outer(beta, beta)
        h_bt = mu * (G @ (dp - dn)) - 4.0 * t * beta / q ** 2
        h_tt = mu ** 2 * (dp.sum() + dn.sum()) + 4.0 * t * t / q ** 2 - 2.0 / q

        ratio = D2 / D1
        K = np.empty((self.m + 1, self.m + 1))
        K[:-1, :-1] = H
        K[:-1, -1] = h_bt
        K[-1, :-1] = h_bt
        K[-1, -1] = h_tt
        rhs = np.concatenate([-g_beta + ratio * g_u, [-g_t]])
        try:
            sol = sla.cho_solve(sla.cho_factor(K, check_finite=False), rhs, check_finite=False)
        except (np.linalg.LinAlgError, ValueError):
            sol = np.linalg.lstsq(K, rhs, rcond=None)[0]
        d_beta, d_t = sol[:-1], sol[-1]
        d_u = (-g_u - D2 * d_beta) / D1
        decrement = -(g_beta @ d_beta + g_u @ d_u + g_t * d_t)
        return d_beta, d_u, d_t, decrement


def solve_conic(gp: GramPair, lam: float, mu: float, tau: float, *, tol: float = 1e-7,
                gap_tol: float = 1e-7, max_newton: int = 2000, growth: float = 20.0,
                max_centering: int = 60) -> SolveResult:
    """Solve the conic program; see the module docstring for the method.

    ``gap_tol`` is relative: the barrier stops once
    ``nu / kappa <= gap_tol * (1 + |objective|)``, i.e. the objective of the
    returned point is within that gap of the optimum (up to centering error). When ``||gamma||_inf <= tau``
    the pair ``(0, 0)`` is feasible with objective 0 and is returned directly.
    """
    if not lam > 0 or not mu > 0 or tau < 0:
        raise InvalidInput("conic program needs lambda > 0, mu > 0 and tau >= 0")
    G, g = gp.Gamma_hat, gp.gamma_hat
    m = g.shape[0]
    ginf = float(np.max(np.abs(g))) if m else 0.0
    if ginf <= tau:
        beta = np.zeros(m)
        return SolveResult(beta, 0.0, feasibility_summary(gp, beta), 0, True, tol, t_hat=0.0,
                           diagnostics={"duality_gap": 0.0, "newton_steps": 0, "trivial": True})

    bar = _Barrier(G, g, lam, mu, tau)
    nu = 4 * m + 2
    beta = np.zeros(m)
    u = np.ones(m)
    t = max((ginf - tau) / mu, 0.0) + 1.0
    c0 = u.sum() + lam * t
    kappa = max(1.0, nu / c0)
    newton_steps = 0
    converged = False
    outer = 0
    while newton_steps < max_newton:
        outer += 1
        # centering; stops early once round-off stalls the line search
        for _ in range(max_centering):
            if newton_steps >= max_newton:
                break
            d_beta, d_u, d_t, dec = bar.newton(kappa, beta, u, t)
            newton_steps += 1
            if not np.isfinite(dec) or dec / 2 <= 1e-10:
                break
            phi0 = bar.value(kappa, beta, u, t)
            s = 1.0
            while s > 1e-14:
                nb, nu_, nt = beta + s * d_beta, u + s * d_u, t + s * d_t
                val = bar.value(kappa, nb, nu_, nt)
                if val <= phi0 - 0.01 * s * dec:
                    break
                s *= 0.5
            else:
                break
            beta, u, t = nb, nu_, nt
            if s < 1e-8:
                break
        obj = float(u.sum() + lam * t)
        gap = nu / kappa
        if gap <= gap_tol * (1 + abs(obj)):
            converged = True
            break
        kappa *= growth

    beta_hat = beta.copy()
    # report the objective of (beta, t) itself, u only upper-bounds |beta|
    obj = conic_objective(lam, beta_hat, t)
    feas = feasibility_summary(gp, beta_hat)
    feas["ball_violation"] = max(0.0, feas["l2_norm"] - t)
    feas["cone_violation"] = max(0.0, feas["infnorm_residual"] - (mu * t + tau))
    return SolveResult(beta_hat, obj, feas, newton_steps, converged, tol, t_hat=float(t),
                       diagnostics={"duality_gap": float(nu / kappa), "newton_steps": newton_steps,
                                    "outer_iterations": outer, "lambda": lam, "mu": mu, "tau": tau})
