"""Sampled l_q-sensitivity of a matrix over the l1 cone."""
from __future__ import annotations

import itertools
import math

import numpy as np

from ..errors import InvalidInput
from ..rng import RngStream
from .certificates import ConditionCertificate, ConditionKind, Status

# cone ratios are drawn from the dyadic ladder 2^(j/4), j = LADDER_MIN..
LADDER_MIN = -40


def cone_ladder(k0: float) -> np.ndarray:
    """Ratios ``0``, ``2^(j/4) <= k0`` and ``k0`` itself, ascending.

    The ladder of a smaller ``k0`` is contained in that of a larger one
    (apart from the endpoint), which makes the sampled minimum monotone.
    """
    j_max = math.floor(4 * math.log2(k0)) if k0 > 0 else LADDER_MIN - 1
    rungs = [2.0 ** (j / 4) for j in range(LADDER_MIN, j_max + 1)]
    return np.unique(np.array([0.0] + [r for r in rungs if r <= k0] + [k0]))


def _support_samples(Psi, J, k0, q, n_samples, stream: RngStream):
    """Smallest ``||Psi D||_inf / ||D||_q`` over samples in ``Cone_J(k0)`` for one support."""
    m = Psi.shape[1]
    J = np.asarray(J, dtype=np.intp)
    Jc = np.setdiff1d(np.arange(m), J)
    rng = stream.child("J", *J.tolist()).generator()
    # the two sample sets are drawn in full regardless of k0 so that the
    # stream consumption, hence the draws, do not depend on it
    head = rng.standard_normal((n_samples, J.size))
    head[: min(n_samples, J.size)] = np.eye(J.size)[: min(n_samples, J.size)]
    raw = rng.standard_normal((n_samples, max(Jc.size, 1)))
    mask = rng.uniform(size=raw.shape) < rng.uniform(size=(n_samples, 1))
    raw = np.where(mask, raw, 0.0)
    raw[np.abs(raw).sum(1) == 0, 0] = 1.0
    tail_dir = raw / np.abs(raw).sum(1, keepdims=True)
    best, best_d = math.inf, None
    l1_head = np.abs(head).sum(1, keepdims=True)
    for r in cone_ladder(k0):
        D = np.zeros((n_samples, m))
        D[:, J] = head
        if Jc.size:
            D[:, Jc] = r * l1_head * tail_dir[:, : Jc.size]
        num = np.max(np.abs(D @ Psi.T), axis=1)
        den = np.linalg.norm(D, ord=q, axis=1)
        vals = num / den
        k = int(np.argmin(vals))
        if vals[k] < best:
            best, best_d = float(vals[k]), D[k]
    return best, best_d


def lq_sensitivity(Psi, d0: int, k0: float, q: float, n_samples: int = 2000, *,
                   stream: RngStream | None = None, budget: int = 10**4) -> ConditionCertificate:
    """Upper bound on ``kappa_q(d0, k0) = min ||Psi D||_inf / ||D||_q`` over ``|J| <= d0`` and the l1 cone.

    Every support of size at most ``d0`` is visited when their count is within
    ``budget``; each support has its own sub-stream keyed by its indices, so
    the sampled minimum is exactly nonincreasing in ``d0`` (enumerated case)
    and in ``k0`` (for ``k0`` values on the dyadic ladder ``2^(j/4)``).
    """
    Psi = np.asarray(Psi, dtype=float)
    if Psi.ndim != 2:
        raise InvalidInput("Psi must be a matrix")
    if not 1 <= q <= 2 or d0 < 1 or k0 < 0:
        raise InvalidInput("need 1 <= q <= 2, d0 >= 1 and k0 >= 0")
    stream = stream or RngStream(0, ("lq",))
    m = Psi.shape[1]
    d0 = min(int(d0), m)
    total = sum(math.comb(m, s) for s in range(1, d0 + 1))
    if total <= budget:
        supports = [J for s in range(1, d0 + 1) for J in itertools.combinations(range(m), s)]
        enumerated = True
    else:
        rng = stream.child("supports").generator()
        supports = [tuple(sorted(rng.choice(m, size=int(rng.integers(1, d0 + 1)), replace=False).tolist()))
                    for _ in range(budget)]
        enumerated = False
    best, wit = math.inf, None
    for J in supports:
        v, d = _support_samples(Psi, J, k0, q, n_samples, stream)
        if v < best:
            best, wit = v, d
    return ConditionCertificate(
        ConditionKind.LQ_SENSITIVITY, Status.VERIFIED_SAMPLED,
        {"d0": d0, "k0": k0, "q": q, "kappa_q": best}, wit, n_samples * len(supports),
        {"supports_enumerated": enumerated, "n_supports": len(supports), "bound": "upper"})
