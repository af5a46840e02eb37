"""Penalty calibration for both estimators.

Three modes:

* ``baseline``: ``psi = C0 D2 K (K ||beta*|| + M_eps)`` and
  ``lambda = 4 psi sqrt(log m / f)`` with ``D2 = 2(||A|| + ||B||)``; conic
  ``mu = 2 C0 D2 K^2 sqrt(log m / f)`` and ``tau = C0 D0 K M_eps sqrt(log m / f)``.
* ``oracle``: the refined constants that shrink with ``tau_B``;
  ``psi = 2 C0 D0' K (tau_B^{+/2} K ||beta*|| + M_eps)``,
  ``lambda = 2 psi sqrt(log m / f)`` and ``mu = C0 D0' tau~_B^{1/2} K^2 sqrt(log m / f)``.
* ``empirical``: quantiles of ``||gamma - Gamma beta*||_inf`` over a pilot
  Monte Carlo drawn from a stream disjoint from the evaluation draws.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from ..covariance import CovarianceModel
from ..errors import InvalidInput
from ..rng import RngStream
from ..simulate import draw_instance
from .gram import estimate_tau_B, residual_infnorm_from_data


class PenaltyMode(str, enum.Enum):
    BASELINE = "baseline"
    ORACLE = "oracle"
    EMPIRICAL = "empirical"


@dataclass(frozen=True)
class PenaltyPlan:
    psi: float
    lam: float
    mu: float
    tau: float
    mode: PenaltyMode
    components: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"psi": self.psi, "lambda": self.lam, "mu": self.mu, "tau": self.tau,
                "mode": self.mode.value, "components": dict(self.components)}


def _components(A: CovarianceModel, B: CovarianceModel, f: int, m: int, K: float, C0: float,
                tau_B_hat: float | None, C6: float | None) -> dict[str, float]:
    normA, normB = A.op_norm, B.op_norm
    tau_B = B.trace / f
    a_max = float(np.max(np.diag(A.matrix)))
    D_oracle = 2.0 * (math.sqrt(normA) + math.sqrt(normB))
    tau_plus_half = math.sqrt(tau_B) + D_oracle / math.sqrt(m)
    r_mm = 2.0 * C0 * math.sqrt(math.log(m) / (m * f))
    c6 = D_oracle if C6 is None else float(C6)
    if tau_B_hat is None:
        tau_tilde_half = tau_plus_half
    else:
        tau_tilde_half = math.sqrt(max(tau_B_hat, 0.0)) + c6 * K * math.sqrt(r_mm)
    return {
        "D0": math.sqrt(tau_B) + math.sqrt(a_max),
        "D0_prime": math.sqrt(normB) + math.sqrt(a_max),
        "D1": float(np.linalg.norm(A.matrix)) / math.sqrt(m) + float(np.linalg.norm(B.matrix)) / math.sqrt(f),
        "D2": 2.0 * (normA + normB),
        "D_oracle": D_oracle,
        "C6": c6,
        "tau_B": tau_B,
        "tau_B_plus_half": tau_plus_half,
        "tau_B_tilde_half": tau_tilde_half,
        "r_mm": r_mm,
    }


def theory_lambda(A: CovarianceModel, B: CovarianceModel, f: int, m: int, beta_norm: float,
                  M_eps: float, K: float = 1.0, C0: float = 1.0, mode: PenaltyMode | str = "baseline",
                  *, tau_B_hat: float | None = None, C6: float | None = None,
                  pilot_residuals=None, lambda_quantile: float = 0.95,
                  conic_quantile: float = 0.99) -> PenaltyPlan:
    """Build the penalty plan for the given mode.

    Parameters
    ----------
    tau_B_hat : float, optional
        Data estimate entering ``tau~_B^{1/2}`` in oracle mode; when omitted
        the population ``tau_B^{+/2}`` is used instead.
    C6 : float, optional
        Constant in ``tau~_B^{1/2}``; defaults to ``D_oracle``.
    pilot_residuals : array_like
        Required in empirical mode: pilot draws of ``||gamma - Gamma beta*||_inf``.
        ``lambda`` is twice their ``lambda_quantile``; ``(mu, tau)`` keep the
        baseline proportions and are scaled so that ``mu ||beta*|| + tau``
        equals their ``conic_quantile``.
    """
    mode = PenaltyMode(mode)
    if f < 2 or m < 2:
        raise InvalidInput("theory_lambda needs f >= 2 and m >= 2")
    if beta_norm < 0 or M_eps < 0 or K <= 0 or C0 <= 0:
        raise InvalidInput("beta_norm, M_eps must be >= 0 and K, C0 > 0")
    comp = _components(A, B, f, m, K, C0, tau_B_hat, C6)
    rate = math.sqrt(math.log(m) / f)
    base_mu = 2.0 * C0 * comp["D2"] * K * K * rate
    base_tau = C0 * comp["D0"] * K * M_eps * rate

    if mode is PenaltyMode.BASELINE:
        psi = C0 * comp["D2"] * K * (K * beta_norm + M_eps)
        return PenaltyPlan(psi, 4.0 * psi * rate, base_mu, base_tau, mode, comp)

    if mode is PenaltyMode.ORACLE:
        psi = 2.0 * C0 * comp["D0_prime"] * K * (comp["tau_B_plus_half"] * K * beta_norm + M_eps)
        mu = C0 * comp["D0_prime"] * comp["tau_B_tilde_half"] * K * K * rate
        return PenaltyPlan(psi, 2.0 * psi * rate, mu, base_tau, mode, comp)

    if pilot_residuals is None:
        raise InvalidInput("empirical mode needs pilot_residuals")
    res = np.asarray(pilot_residuals, dtype=float)
    if res.size == 0:
        raise InvalidInput("empirical mode needs at least one pilot residual")
    q_lam = float(np.quantile(res, lambda_quantile))
    q_con = float(np.quantile(res, conic_quantile))
    denom = base_mu * beta_norm + base_tau
    scale = q_con / denom if denom > 0 else 0.0
    mu, tau = scale * base_mu, scale * base_tau
    if not mu > 0:
        # degenerate pilot (all residuals zero): keep mu positive
        mu = base_mu
    comp = dict(comp, pilot_q_lambda=q_lam, pilot_q_conic=q_con, conic_scale=scale,
                n_pilot=float(res.size))
    return PenaltyPlan(q_lam / rate if rate > 0 else q_lam, 2.0 * q_lam, mu, tau, mode, comp)


def pilot_residuals(A: CovarianceModel, B: CovarianceModel, d: int, scheme, magnitude: float,
                    M_eps: float, dist, stream: RngStream, n_trials: int = 200) -> np.ndarray:
    """``||gamma - Gamma beta*||_inf`` on ``n_trials`` draws from ``stream.child("pilot", i)``.

    Each pilot draw has its own ``beta*`` of the same sparsity, scheme and
    norm, so the calibration never touches the evaluation instances.
    """
    if n_trials < 1:
        raise InvalidInput("n_trials must be >= 1")
    out = np.empty(n_trials)
    trA = A.trace
    for i in range(n_trials):
        inst = draw_instance(A, B, d, scheme, magnitude, M_eps, dist, stream.child("pilot", i))
        _, tau = estimate_tau_B(inst.X, trA)
        out[i] = residual_infnorm_from_data(inst.X, inst.y, inst.beta_star, tau)
    return out
