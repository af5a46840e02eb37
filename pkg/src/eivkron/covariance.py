"""Row/column covariance models and the scalar summaries the theory uses."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any

import numpy as np

from . import linalg
from .errors import DegenerateA, InvalidInput, NotPSD, TooLarge

# cap on materialized Kronecker-sum entries
KRONECKER_MAX_ENTRIES = 10**6


class Family(str, enum.Enum):
    IDENTITY = "identity"
    AR1 = "ar1"
    EQUICORRELATION = "equicorrelation"
    TOEPLITZ = "toeplitz"
    EXPLICIT = "explicit"


@dataclass(frozen=True, eq=False)
class CovarianceModel:
    """A PSD covariance matrix plus the family it was built from."""

    matrix: np.ndarray
    family: Family = Family.EXPLICIT
    params: dict[str, Any] = field(default_factory=dict)
    trace_normalized: bool = False

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @cached_property
    def sqrt(self) -> np.ndarray:
        if self.is_scaled_identity:
            return math.sqrt(self.matrix[0, 0]) * np.eye(self.dim)
        return linalg.psd_sqrt(self.matrix)

    @cached_property
    def is_scaled_identity(self) -> bool:
        M = self.matrix
        return bool(np.all(M == np.diag(np.diag(M))) and np.all(np.diag(M) == M[0, 0]))

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        """Ascending eigenvalues (cached)."""
        if self.is_scaled_identity:
            return np.full(self.dim, float(self.matrix[0, 0]))
        return np.linalg.eigvalsh(self.matrix)

    @property
    def op_norm(self) -> float:
        return float(max(abs(self.eigenvalues[0]), abs(self.eigenvalues[-1])))

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix))

    def describe(self) -> dict[str, Any]:
        return {"family": self.family.value, "dim": self.dim, **self.params,
                "trace_normalized": self.trace_normalized}


@dataclass(frozen=True)
class SpectralSummary:
    lambda_min: float
    lambda_max: float
    condition_number: float
    effective_rank: float
    stable_rank: float
    a_max: float
    tau: float


@dataclass(frozen=True)
class AssumptionReport:
    A1: bool
    A2: bool
    A3: bool
    s0: int
    varpi_s0: float
    M_A: float
    tau_B: float
    kappa_A: float
    approximate: bool
    detail: dict[str, Any] = field(default_factory=dict)


def _from_matrix(M: np.ndarray, family: Family, params: dict, tol_scale: float = 1e-10) -> CovarianceModel:
    M = linalg.as_symmetric(M, "covariance")
    if family is Family.IDENTITY:
        # PSD by construction (scale >= 0 is checked by the caller)
        return CovarianceModel(M, family, dict(params))
    w = np.linalg.eigvalsh(M)
    tol = tol_scale * max(abs(w[0]), abs(w[-1]), 0.0)
    if w[0] < -tol:
        raise NotPSD(f"{family.value} covariance with params {params} has lambda_min={w[0]:.6g}")
    return CovarianceModel(M, family, dict(params))


def build_covariance(family: str | Family, dim: int, **params) -> CovarianceModel:
    """Construct a structured covariance.

    Supported ``params``: ``rho`` (AR1, equicorrelation), ``first_row``
    (Toeplitz), ``matrix`` (explicit) and, for every family, ``scale``
    multiplying the result (``scale=0`` gives the zero matrix).
    """
    family = Family(family)
    dim = int(dim)
    if dim < 1:
        raise InvalidInput("dim must be >= 1")
    scale = float(params.get("scale", 1.0))
    if scale < 0 or not math.isfinite(scale):
        raise NotPSD(f"scale must be finite and >= 0, got {scale}")

    if family is Family.IDENTITY:
        M = np.eye(dim)
    elif family is Family.AR1:
        rho = float(params["rho"])
        if not abs(rho) < 1:
            raise NotPSD(f"AR1 requires |rho| < 1, got {rho}")
        idx = np.arange(dim)
        M = rho ** np.abs(idx[:, None] - idx[None, :]).astype(float)
    elif family is Family.EQUICORRELATION:
        rho = float(params["rho"])
        lower = -1.0 / (dim - 1) if dim > 1 else -np.inf
        if not (lower < rho < 1):
            raise NotPSD(f"equicorrelation requires rho in ({lower:.4g}, 1), got {rho}")
        M = np.full((dim, dim), rho)
        np.fill_diagonal(M, 1.0)
    elif family is Family.TOEPLITZ:
        row = np.asarray(params["first_row"], dtype=float)
        if row.shape != (dim,):
            raise InvalidInput(f"first_row must have length {dim}")
        idx = np.arange(dim)
        M = row[np.abs(idx[:, None] - idx[None, :])]
    else:
        M = np.asarray(params["matrix"], dtype=float)
        if M.shape != (dim, dim):
            raise InvalidInput(f"explicit matrix must be {dim}x{dim}")
    return _from_matrix(scale * M, family, params)


def from_spec(spec: dict[str, Any], dim: int) -> CovarianceModel:
    """Build from a config mapping ``{family, ...params, normalize_trace?}``."""
    spec = dict(spec)
    family = spec.pop("family", "identity")
    normalize = spec.pop("normalize_trace", None)
    spec.pop("dim", None)
    cov = build_covariance(family, dim, **spec)
    if normalize:
        target = dim if normalize is True else float(normalize)
        cov = normalize_trace(cov, target)
    return cov


def normalize_trace(C: CovarianceModel, target: float) -> CovarianceModel:
    tr = C.trace
    if not tr > 0:
        raise InvalidInput(f"cannot normalize a covariance with trace {tr}")
    M = C.matrix * (target / tr)
    return CovarianceModel(M, C.family, dict(C.params), trace_normalized=True)


def kronecker_sum(A: CovarianceModel, B: CovarianceModel, max_entries: int = KRONECKER_MAX_ENTRIES) -> np.ndarray:
    """``A (x) I_f + I_m (x) B`` as a dense ``(m f) x (m f)`` matrix."""
    m, f = A.dim, B.dim
    if m * f > max_entries:
        raise TooLarge(f"Kronecker sum of size {m * f} exceeds cap {max_entries}")
    return np.kron(A.matrix, np.eye(f)) + np.kron(np.eye(m), B.matrix)


def spectral_summary(C: CovarianceModel) -> SpectralSummary:
    w = C.eigenvalues
    lmin, lmax = float(w[0]), float(w[-1])
    op = max(abs(lmin), abs(lmax))
    fro2 = float(np.sum(C.matrix ** 2))
    tr = C.trace
    if lmin > 0:
        kappa = lmax / lmin
    else:
        kappa = math.inf
    return SpectralSummary(
        lambda_min=lmin,
        lambda_max=lmax,
        condition_number=kappa,
        effective_rank=tr / op if op > 0 else 0.0,
        stable_rank=fro2 / op ** 2 if op > 0 else 0.0,
        a_max=float(np.max(np.diag(C.matrix))),
        tau=tr / C.dim,
    )


def check_assumptions(A: CovarianceModel, B: CovarianceModel, f: int, m: int, C: float = 1.0,
                      kappa_const: float = 1.0, tau_const: float = 1.0,
                      budget: int = 10**5) -> AssumptionReport:
    """Evaluate (A1)-(A3) and the sparsity level ``s0`` with its ``M_A``.

    ``s0`` is the largest integer with
    ``sqrt(s0) * (rho_max(s0, A) + tau_B) <= lambda_min(A) / (32 C) * sqrt(f / log m)``
    (0 if even ``s0 = 1`` fails). ``kappa_const`` and ``tau_const`` are the
    constants hidden in the O(.) bounds of (A3).
    """
    from .conditions.sparse import sparse_eig

    if A.dim != m or B.dim != f:
        raise InvalidInput("A must be m x m and B must be f x f")
    if m < 2:
        raise InvalidInput("m must be >= 2")
    sA = spectral_summary(A)
    if sA.lambda_min <= 0:
        raise DegenerateA(f"lambda_min(A) = {sA.lambda_min:.3g}")
    tau_B = B.trace / f
    rhs = sA.lambda_min / (32.0 * C) * math.sqrt(f / math.log(m))

    approximate = False
    rho_cache: dict[int, float] = {}

    def varpi(s: int) -> float:
        nonlocal approximate
        if s not in rho_cache:
            res = sparse_eig(A.matrix, s, budget=budget)
            approximate = approximate or not res.exact
            rho_cache[s] = res.rho_max
        return rho_cache[s] + tau_B

    s0 = 0
    for s in range(1, m + 1):
        if math.sqrt(s) * varpi(s) <= rhs:
            s0 = s
        else:
            break
    w0 = varpi(max(s0, 1))
    a1 = abs(A.trace - m) <= 1e-10 * m
    a2 = 0 < sA.lambda_min <= 1 + 1e-12
    a3 = (sA.condition_number <= kappa_const * math.sqrt(f / math.log(m))
          and tau_B <= tau_const * sA.lambda_max)
    return AssumptionReport(
        A1=bool(a1), A2=bool(a2), A3=bool(a3), s0=s0, varpi_s0=w0,
        M_A=64.0 * C * w0 / sA.lambda_min, tau_B=tau_B, kappa_A=sA.condition_number,
        approximate=approximate,
        detail={"rhs": rhs, "rho_max": dict(rho_cache)},
    )
