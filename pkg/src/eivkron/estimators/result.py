from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np


@dataclass(eq=False)
class SolveResult:
    beta_hat: np.ndarray
    objective: float
    feasibility: dict[str, float]
    iterations: int
    converged: bool
    tolerance_used: float
    t_hat: float | None = None
    diagnostics: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        out = {
            "beta_hat": [float(b) for b in self.beta_hat],
            "objective": float(self.objective),
            "feasibility": {k: float(v) for k, v in self.feasibility.items()},
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
            "tolerance_used": float(self.tolerance_used),
            "diagnostics": _jsonable(self.diagnostics),
        }
        if self.t_hat is not None:
            out["t_hat"] = float(self.t_hat)
        return out


def feasibility_summary(gp, beta) -> dict[str, float]:
    return {
        "infnorm_residual": float(np.max(np.abs(gp.gamma_hat - gp.Gamma_hat @ beta))) if beta.size else 0.0,
        "l2_norm": float(np.linalg.norm(beta)),
        "l1_norm": float(np.sum(np.abs(beta))),
    }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj
