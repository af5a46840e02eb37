"""Outcome records for restricted-eigenvalue type checks."""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..estimators.result import _jsonable


class ConditionKind(str, enum.Enum):
    LOWER_RE = "lower_re"
    UPPER_RE = "upper_re"
    RE = "re"
    SPARSE_EIG = "sparse_eig"
    LQ_SENSITIVITY = "lq_sensitivity"


class Status(str, enum.Enum):
    VERIFIED_EXACT = "verified_exact"
    VERIFIED_SAMPLED = "verified_sampled"
    FALSIFIED = "falsified"


@dataclass(frozen=True, eq=False)
class ConditionCertificate:
    """Result of a condition check.

    ``params`` holds the checked parameters (e.g. ``alpha`` and ``tau``).
    A falsified certificate carries the violating ``witness``; a sampled one
    records ``n_samples``.
    """

    kind: ConditionKind
    status: Status
    params: dict[str, Any]
    witness: np.ndarray | None = None
    n_samples: int = 0
    detail: dict[str, Any] = field(default_factory=dict)

    @property
    def falsified(self) -> bool:
        return self.status is Status.FALSIFIED

    @property
    def verified(self) -> bool:
        return not self.falsified

    def to_dict(self) -> dict[str, Any]:
        out = {"kind": self.kind.value, "status": self.status.value, "params": _jsonable(self.params),
               "n_samples": int(self.n_samples), "detail": _jsonable(self.detail)}
        if self.witness is not None:
            out["witness"] = [float(x) for x in self.witness]
        return out

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, **kw)
