"""Matrix-variate subgaussian data under the additive measurement-error model.

``X0 = Z1 A^{1/2}`` has independent rows, ``W = B^{1/2} Z2`` has independent
columns, and the analyst observes ``X = X0 + W`` and ``y = X0 beta* + eps``.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .covariance import CovarianceModel
from .errors import InvalidInput
from .rng import RngStream, as_generator


class EntryKind(str, enum.Enum):
    GAUSSIAN = "gaussian"
    RADEMACHER = "rademacher"
    UNIFORM = "uniform"


@dataclass(frozen=True)
class EntryDistribution:
    """Mean-zero, unit-variance entry law; ``K`` is recorded, not enforced."""

    kind: EntryKind = EntryKind.GAUSSIAN
    K: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", EntryKind(self.kind))

    @classmethod
    def parse(cls, value) -> "EntryDistribution":
        if isinstance(value, EntryDistribution):
            return value
        if isinstance(value, dict):
            return cls(EntryKind(value.get("kind", "gaussian")), float(value.get("K", 1.0)))
        return cls(EntryKind(value))


class BetaScheme(str, enum.Enum):
    UNIT_EQUAL = "unit_equal"
    SIGNED_EQUAL = "signed_equal"
    DECAY = "decay"


@dataclass(frozen=True, eq=False)
class DatasetInstance:
    X0: np.ndarray
    W: np.ndarray
    X: np.ndarray
    y: np.ndarray
    beta_star: np.ndarray
    epsilon: np.ndarray
    meta: dict[str, Any] = field(default_factory=dict)

    @property
    def f(self) -> int:
        return self.X.shape[0]

    @property
    def m(self) -> int:
        return self.X.shape[1]


def sample_subgaussian_matrix(rows: int, cols: int, dist: EntryDistribution | str, stream) -> np.ndarray:
    """i.i.d. mean-zero unit-variance entries, deterministic given ``stream``."""
    if rows < 1 or cols < 1:
        raise InvalidInput("rows and cols must be >= 1")
    dist = EntryDistribution.parse(dist)
    rng = as_generator(stream)
    if dist.kind is EntryKind.GAUSSIAN:
        return rng.standard_normal((rows, cols))
    if dist.kind is EntryKind.RADEMACHER:
        return 2.0 * rng.integers(0, 2, size=(rows, cols)).astype(float) - 1.0
    s = math.sqrt(3.0)
    return rng.uniform(-s, s, size=(rows, cols))


def make_sparse_beta(m: int, d: int, scheme: BetaScheme | str = BetaScheme.UNIT_EQUAL,
                     magnitude: float = 1.0, stream=None) -> np.ndarray:
    """A ``d``-sparse vector on a uniformly random support with ``||beta||_2 == magnitude``.

    ``decay`` uses random-sign values proportional to ``1/k`` for ``k = 1..d``.
    """
    if not 0 <= d <= m:
        raise InvalidInput(f"need 0 <= d <= m, got d={d}, m={m}")
    scheme = BetaScheme(scheme)
    beta = np.zeros(m)
    if d == 0:
        return beta
    rng = as_generator(stream)
    support = np.sort(rng.choice(m, size=d, replace=False))
    if scheme is BetaScheme.UNIT_EQUAL:
        vals = np.full(d, magnitude / math.sqrt(d))
    elif scheme is BetaScheme.SIGNED_EQUAL:
        vals = rng.choice([-1.0, 1.0], size=d) * (magnitude / math.sqrt(d))
    else:
        raw = 1.0 / np.arange(1, d + 1)
        vals = rng.choice([-1.0, 1.0], size=d) * raw * (magnitude / np.linalg.norm(raw))
    beta[support] = vals
    return beta


def sample_design(A: CovarianceModel, B: CovarianceModel, dist, stream: RngStream) -> tuple[np.ndarray, np.ndarray]:
    """Draw ``(X0, W)`` from the ``Z1`` and ``Z2`` sub-streams of ``stream``."""
    m, f = A.dim, B.dim
    dist = EntryDistribution.parse(dist)
    Z1 = sample_subgaussian_matrix(f, m, dist, stream.child("Z1"))
    Z2 = sample_subgaussian_matrix(f, m, dist, stream.child("Z2"))
    X0 = math.sqrt(A.matrix[0, 0]) * Z1 if A.is_scaled_identity else Z1 @ A.sqrt
    W = math.sqrt(B.matrix[0, 0]) * Z2 if B.is_scaled_identity else B.sqrt @ Z2
    return X0, W


def sample_instance(A: CovarianceModel, B: CovarianceModel, beta_star, M_eps: float,
                    dist, stream: RngStream) -> DatasetInstance:
    """One draw of ``(X0, W, X, y)`` for a fixed ``beta_star``.

    ``Z1``, ``Z2`` and ``eps`` come from the independent sub-streams tagged
    ``"Z1"``, ``"Z2"`` and ``"eps"``; the noise is ``M_eps`` times a
    unit-variance draw of the same entry law.
    """
    beta_star = np.asarray(beta_star, dtype=float)
    m, f = A.dim, B.dim
    if beta_star.shape != (m,):
        raise InvalidInput(f"beta_star must have length {m}")
    if M_eps < 0:
        raise InvalidInput("M_eps must be >= 0")
    dist = EntryDistribution.parse(dist)
    if not isinstance(stream, RngStream):
        stream = RngStream(int(stream))
    X0, W = sample_design(A, B, dist, stream)
    eps = M_eps * sample_subgaussian_matrix(f, 1, dist, stream.child("eps"))[:, 0]
    X = X0 + W
    y = X0 @ beta_star + eps
    meta = {
        "f": f, "m": m, "d": int(np.count_nonzero(beta_star)), "M_eps": float(M_eps),
        "K": dist.K, "distribution": dist.kind.value, "seed": stream.seed, "stream": stream.label(),
    }
    return DatasetInstance(X0, W, X, y, beta_star, eps, meta)


def draw_instance(A: CovarianceModel, B: CovarianceModel, d: int, scheme, magnitude: float,
                  M_eps: float, dist, stream: RngStream) -> DatasetInstance:
    """Draw ``beta*`` from the ``"beta"`` sub-stream and then the data."""
    beta = make_sparse_beta(A.dim, d, scheme, magnitude, stream.child("beta"))
    return sample_instance(A, B, beta, M_eps, dist, stream)


# --- CSV bundle -----------------------------------------------------------

def _savetxt(path: Path, arr: np.ndarray) -> None:
    np.savetxt(path, np.atleast_2d(arr) if arr.ndim == 2 else arr.reshape(-1, 1), delimiter=",", fmt="%.17g")


def write_bundle(inst: DatasetInstance, out_dir, include_truth: bool = True) -> list[Path]:
    """Write ``X.csv``, ``y.csv`` (and ``beta.csv``, ``meta.json``) to ``out_dir``.

    Files are headerless comma-separated values printed with 17 significant
    digits, so a reload reproduces every float exactly.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / "X.csv", out / "y.csv"]
    _savetxt(paths[0], inst.X)
    _savetxt(paths[1], inst.y)
    if include_truth:
        paths.append(out / "beta.csv")
        _savetxt(paths[-1], inst.beta_star)
        paths.append(out / "meta.json")
        paths[-1].write_text(json.dumps(inst.meta, indent=2, sort_keys=True) + "\n")
    return paths


def read_matrix_csv(path) -> np.ndarray:
    arr = np.loadtxt(path, delimiter=",", ndmin=2)
    return arr


def read_vector_csv(path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", ndmin=2).reshape(-1)
