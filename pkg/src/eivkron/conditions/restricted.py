"""Lower/Upper-RE certificates, restricted-eigenvalue constants and conversions."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidInput
from ..estimators.prox import project_l1_ball
from ..linalg import as_symmetric
from ..rng import as_generator
from .certificates import ConditionCertificate, ConditionKind, Status

# dimension up to which the sign-pattern bound is tried (2^(m-1) patterns)
SIGN_PATTERN_MAX_DIM = 14
FALSIFY_RTOL = 1e-9


@dataclass(frozen=True)
class SearchConfig:
    n_random: int = 2000
    n_sparse_dirs: int = 2000
    local_descent: bool = True
    descent_starts: int = 8
    descent_iters: int = 300
    seed: int = 0


def _margin(G, a, tau, theta):
    """``theta' G theta - a ||theta||_2^2 + tau ||theta||_1^2`` for the rows of ``theta``."""
    theta = np.atleast_2d(theta)
    return (np.einsum("ij,jk,ik->i", theta, G, theta) - a * np.sum(theta ** 2, 1)
            + tau * np.sum(np.abs(theta), 1) ** 2)


def _sign_pattern_bound(G, a, tau):
    """``max_sigma lambda_min(G - a I + tau sigma sigma')``, a lower bound on the unit-sphere margin.

    For every sign vector ``sigma``, ``||theta||_1^2 >= (sigma' theta)^2``,
    so the margin dominates each of these quadratic forms.
    """
    m = G.shape[0]
    base = G - a * np.eye(m)
    best = -math.inf
    # sigma and -sigma give the same form; fix the first sign
    patterns = np.array(list(itertools.product((1.0, -1.0), repeat=m - 1))).reshape(-1, m - 1)
    for block in np.array_split(patterns, max(1, patterns.shape[0] // 1024)):
        S = np.column_stack([np.ones(block.shape[0]), block])
        mats = base[None] + tau * S[:, :, None] * S[:, None, :]
        best = max(best, float(np.max(np.linalg.eigvalsh(mats)[:, 0])))
    return best


def _sphere_descent(G, a, tau, theta, iters, step):
    best_v, best_t = float(_margin(G, a, tau, theta)[0]), theta
    for _ in range(iters):
        grad = 2 * (G @ theta - a * theta) + 2 * tau * np.sum(np.abs(theta)) * np.sign(theta)
        grad -= (grad @ theta) * theta
        nxt = theta - step * grad
        nrm = np.linalg.norm(nxt)
        if nrm == 0:
            break
        theta = nxt / nrm
        v = float(_margin(G, a, tau, theta)[0])
        if v < best_v:
            best_v, best_t = v, theta
    return best_v, best_t


def _check_margin(G, a, tau, search: SearchConfig):
    """Search for ``theta`` with negative margin; returns ``(status, witness, min_found, n, detail)``."""
    m = G.shape[0]
    w, V = np.linalg.eigh(G)
    scale = max(abs(w[0]), abs(w[-1]), 1e-300)
    if w[0] + tau - a >= 0:
        return Status.VERIFIED_EXACT, None, w[0] + tau - a, 0, {"method": "closed_form"}
    if tau == 0:
        # the margin is a plain quadratic form, minimized by the bottom eigenvector
        v = V[:, 0]
        val = float(_margin(G, a, tau, v)[0])
        st = Status.FALSIFIED if val < -FALSIFY_RTOL * scale else Status.VERIFIED_EXACT
        return st, (v if st is Status.FALSIFIED else None), val, 1, {"method": "eigen"}
    if m <= SIGN_PATTERN_MAX_DIM:
        lb = _sign_pattern_bound(G, a, tau)
        if lb >= 0:
            return Status.VERIFIED_EXACT, None, lb, 2 ** (m - 1), {"method": "sign_pattern", "lower_bound": lb}

    rng = as_generator(search.seed)
    cands = [V.T]
    cands.append(rng.standard_normal((search.n_random, m)))
    sp = np.zeros((search.n_sparse_dirs, m))
    smax = min(m, 4)
    for i in range(search.n_sparse_dirs):
        k = 1 + i % smax
        idx = rng.choice(m, size=k, replace=False)
        sp[i, idx] = rng.choice([-1.0, 1.0], size=k)
    cands.append(sp)
    T = np.vstack(cands)
    T /= np.linalg.norm(T, axis=1, keepdims=True)
    vals = _margin(G, a, tau, T)
    n = T.shape[0]
    k = int(np.argmin(vals))
    best_v, best_t = float(vals[k]), T[k]
    if search.local_descent:
        step = 0.25 / (scale + abs(a) + tau * m)
        for j in np.argsort(vals)[: search.descent_starts]:
            v, t = _sphere_descent(G, a, tau, T[j], search.descent_iters, step)
            n += search.descent_iters
            if v < best_v:
                best_v, best_t = v, t
    if best_v < -FALSIFY_RTOL * scale:
        return Status.FALSIFIED, best_t, best_v, n, {"method": "search"}
    return Status.VERIFIED_SAMPLED, None, best_v, n, {"method": "search"}


def check_lower_re(Gamma, alpha: float, tol_tau: float, search: SearchConfig | None = None) -> ConditionCertificate:
    """Check ``theta' Gamma theta >= alpha ||theta||_2^2 - tau ||theta||_1^2`` for all ``theta``.

    Verified exactly when ``lambda_min(Gamma) + tau >= alpha`` or when the
    sign-pattern lower bound is nonnegative; otherwise a sampled search over
    random, sparse and eigen directions refined by descent on the sphere.
    A witness is reported only if it violates by more than ``1e-9 ||Gamma||_2``.
    """
    if not alpha > 0 or tol_tau < 0:
        raise InvalidInput("need alpha > 0 and tau >= 0")
    G = as_symmetric(Gamma, "Gamma")
    st, wit, val, n, detail = _check_margin(G, float(alpha), float(tol_tau), search or SearchConfig())
    return ConditionCertificate(ConditionKind.LOWER_RE, st, {"alpha": alpha, "tau": tol_tau}, wit, n,
                                dict(detail, min_margin=val))


def check_upper_re(Gamma, alpha_bar: float, tol_tau: float, search: SearchConfig | None = None) -> ConditionCertificate:
    """Check ``theta' Gamma theta <= alpha_bar ||theta||_2^2 + tau ||theta||_1^2`` for all ``theta``.

    Same machinery as :func:`check_lower_re` applied to ``-Gamma`` and ``-alpha_bar``.
    """
    if not alpha_bar > 0 or tol_tau < 0:
        raise InvalidInput("need alpha_bar > 0 and tau >= 0")
    G = as_symmetric(Gamma, "Gamma")
    st, wit, val, n, detail = _check_margin(-G, -float(alpha_bar), float(tol_tau), search or SearchConfig())
    return ConditionCertificate(ConditionKind.UPPER_RE, st, {"alpha_bar": alpha_bar, "tau": tol_tau}, wit, n,
                                dict(detail, min_margin=val))


def lower_re_margin(Gamma, alpha, tau, theta) -> float:
    """Normalized margin of one ``theta`` (negative means the inequality fails)."""
    theta = np.asarray(theta, dtype=float)
    return float(_margin(np.asarray(Gamma, float), alpha, tau, theta / np.linalg.norm(theta))[0])


def upper_re_margin(Gamma, alpha_bar, tau, theta) -> float:
    theta = np.asarray(theta, dtype=float)
    return float(_margin(-np.asarray(Gamma, float), -alpha_bar, tau, theta / np.linalg.norm(theta))[0])


# --- conversions -------------------------------------------------------------

def lre_to_re(alpha: float, tau: float, s0: float, k0: float) -> tuple[float, bool]:
    """Return ``(bound, valid)``: if ``tau (1 + k0)^2 s0 <= alpha / 2`` then ``1/K(s0, k0) >= sqrt(alpha / 2)``."""
    if not (alpha > 0 and tau >= 0 and s0 > 0 and k0 > 0):
        raise InvalidInput("need alpha, s0, k0 > 0 and tau >= 0")
    valid = tau * (1 + k0) ** 2 * s0 <= alpha / 2
    return math.sqrt(alpha / 2), bool(valid)


def re_to_lre(K_const: float, k0: float, lambda_min_Gamma: float) -> tuple[float, float, int]:
    """From RE(s0, k0) with ``s0 = (k0 + 1)^2`` to Lower-RE parameters.

    Returns ``(alpha, tau_min, s0)`` with ``alpha = 1 / ((k0 + 1) K^2)`` and
    ``tau_min = max(0, 4 / ((k0 + 1)^3 K^2) - 4 lambda_min / (k0 + 1)^2)``.
    """
    if not (K_const > 0 and k0 > 0):
        raise InvalidInput("need K > 0 and k0 > 0")
    alpha = 1.0 / ((k0 + 1) * K_const ** 2)
    tau = 4.0 / ((k0 + 1) ** 3 * K_const ** 2) - 4.0 * lambda_min_Gamma / (k0 + 1) ** 2
    return alpha, max(0.0, tau), int(round((k0 + 1) ** 2))


# --- restricted eigenvalue constant ---------------------------------------------

@dataclass(frozen=True)
class REEstimate:
    """``inv_K`` is the smallest ratio found, an upper bound on ``1/K``; so ``K_est <= K``."""

    K_est: float
    inv_K: float
    status: Status
    n_supports: int
    exhaustive_supports: bool
    witness: np.ndarray | None = None
    detail: dict = field(default_factory=dict)


def _cone_min_for_support(R, J, k0, rng, n_restarts, iters):
    """Smallest ``||R v||_2`` found over ``||v_J||_2 = 1``, ``||v_Jc||_1 <= k0 ||v_J||_1``."""
    m = R.shape[1]
    Jc = np.setdiff1d(np.arange(m), J)
    RJ, RJc = R[:, J], R[:, Jc]
    L = max(np.linalg.norm(R, 2) ** 2, 1e-12)
    step = 0.5 / L
    best, best_v = math.inf, None

    starts = []
    if RJ.shape[1]:
        _, _, Vt = np.linalg.svd(RJ, full_matrices=True)
        starts.append(Vt[-1])
    for _ in range(n_restarts - len(starts)):
        starts.append(rng.standard_normal(len(J)))
    for x in starts:
        x = x / np.linalg.norm(x)
        z = np.zeros(len(Jc)) if not Jc.size else project_l1_ball(rng.standard_normal(len(Jc)), k0 * np.abs(x).sum() * rng.uniform())
        for _ in range(iters):
            r = RJ @ x + RJc @ z
            val = float(r @ r)
            if val < best:
                best = val
                v = np.zeros(m)
                v[J], v[Jc] = x, z
                best_v = v
            gx = 2 * (RJ.T @ r)
            x = x - step * (gx - (gx @ x) * x)
            x /= np.linalg.norm(x)
            if Jc.size:
                z = project_l1_ball(z - step * 2 * (RJc.T @ r), k0 * np.abs(x).sum())
        r = RJ @ x + RJc @ z
        if float(r @ r) < best:
            best = float(r @ r)
            best_v = np.zeros(m)
            best_v[J], best_v[Jc] = x, z
    return math.sqrt(max(best, 0.0)), best_v


def re_constant(R, s0: int, k0: float, method: str = "enumerate", *, n_restarts: int = 32,
                iters: int = 200, budget: int = 10**5, n_supports: int = 200, seed: int = 0) -> REEstimate:
    """Estimate ``K(s0, k0, R)`` from ``1/K = min ||R v||_2 / ||v_J||_2`` over the RE cone.

    Only supports with ``|J| = min(s0, m)`` are searched, since enlarging
    ``J`` enlarges the cone and shrinks the ratio. With ``s0 >= m`` the cone
    is all of ``R^m`` and ``1/K = sigma_min(R)`` exactly. Otherwise each
    support's inner minimization runs projected gradient from ``n_restarts``
    starts; every iterate is feasible, so the reported ``inv_K`` is an upper
    bound on ``1/K`` and ``K_est`` a lower bound on ``K``.

    ``method="enumerate"`` visits all ``C(m, s0)`` supports when within
    ``budget``; ``method="sampled"`` (or an over-budget enumeration) visits
    ``n_supports`` random supports.
    """
    R = np.asarray(R, dtype=float)
    if R.ndim != 2:
        raise InvalidInput("R must be a matrix")
    if s0 < 1 or not k0 > 0:
        raise InvalidInput("need s0 >= 1 and k0 > 0")
    m = R.shape[1]
    s = min(int(s0), m)
    if s == m:
        sv = np.linalg.svd(R, compute_uv=False)
        smin = float(sv[-1]) if R.shape[0] >= m else 0.0
        K = math.inf if smin == 0 else 1.0 / smin
        return REEstimate(K, smin, Status.VERIFIED_EXACT, 1, True, detail={"method": "svd"})
    rng = as_generator(seed)
    exhaustive = method == "enumerate" and math.comb(m, s) <= budget
    if exhaustive:
        supports = [np.array(J) for J in itertools.combinations(range(m), s)]
    else:
        supports = [np.sort(rng.choice(m, size=s, replace=False)) for _ in range(n_supports)]
    best, wit = math.inf, None
    for J in supports:
        val, v = _cone_min_for_support(R, J, k0, rng, n_restarts, iters)
        if val < best:
            best, wit = val, v
    K = math.inf if best == 0 else 1.0 / best
    return REEstimate(K, best, Status.VERIFIED_SAMPLED, len(supports), exhaustive, wit,
                      {"method": method, "n_restarts": n_restarts})
