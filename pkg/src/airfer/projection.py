"""Shared d x k projection matrices and the matching CIS-side decoder."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np


class ProjectionKind(str, enum.Enum):
    ORTHOGONAL = "orthogonal"
    GAUSSIAN = "gaussian"
    RADEMACHER = "rademacher"
    IDENTITY = "identity"


@dataclass(frozen=True)
class ProjectionSpec:
    kind: ProjectionKind
    d: int
    k: int
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", ProjectionKind(self.kind))
        if self.d < 1:
            raise ValueError(f"d must be >= 1, got {self.d}")
        if self.k < 2:
            raise ValueError(f"k must be >= 2, got {self.k}")
        if self.kind is ProjectionKind.IDENTITY and self.d != self.k:
            raise ValueError(f"identity projection requires d == k, got d={self.d}, k={self.k}")
        if self.seed < 0:
            raise ValueError("seed must be unsigned")


@dataclass(frozen=True)
class ProjectionMatrix:
    entries: np.ndarray = field(repr=False)
    spec: ProjectionSpec

    @property
    def d(self) -> int:
        return self.entries.shape[0]

    @property
    def k(self) -> int:
        return self.entries.shape[1]

    @property
    def op_norm_sq(self) -> float:
        """Squared spectral norm: worst-case energy gain of ``P @ v``."""
        return float(np.linalg.norm(self.entries, 2) ** 2)

    @property
    def frobenius_sq(self) -> float:
        return float(np.sum(self.entries**2))


def haar_orthogonal(c: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed c x c orthogonal matrix via sign-corrected QR."""
    m = rng.standard_normal((c, c))
    q, r = np.linalg.qr(m)
    signs = np.where(np.diag(r) < 0, -1.0, 1.0)
    return q * signs


def sample_projection(spec: ProjectionSpec) -> ProjectionMatrix:
    rng = np.random.default_rng(spec.seed)
    d, k = spec.d, spec.k
    if spec.kind is ProjectionKind.ORTHOGONAL:
        entries = haar_orthogonal(max(d, k), rng)[:d, :k]
    elif spec.kind is ProjectionKind.GAUSSIAN:
        entries = rng.standard_normal((d, k)) / np.sqrt(d)
    elif spec.kind is ProjectionKind.RADEMACHER:
        entries = rng.choice([-1.0, 1.0], size=(d, k)) / np.sqrt(d)
    else:
        entries = np.eye(k)
    entries = np.ascontiguousarray(entries)
    entries.setflags(write=False)
    return ProjectionMatrix(entries, spec)


def project(P: ProjectionMatrix, v) -> np.ndarray:
    """``P @ v``; also accepts a stack of k-vectors in the last axis."""
    v = np.asarray(v, dtype=float)
    if v.shape[-1] != P.k:
        raise ValueError(f"expected vectors of length {P.k}, got {v.shape[-1]}")
    return v @ P.entries.T


def decode(P: ProjectionMatrix, z, gamma) -> np.ndarray:
    """``(1/gamma) P^T z``. ``gamma`` may be a scalar or one value per row of ``z``."""
    z = np.asarray(z, dtype=float)
    if z.shape[-1] != P.d:
        raise ValueError(f"expected received vectors of length {P.d}, got {z.shape[-1]}")
    gamma = np.asarray(gamma, dtype=float)
    if np.any(gamma <= 0):
        raise ValueError("gamma must be > 0")
    out = z @ P.entries
    if gamma.ndim:
        return out / gamma[..., None]
    return out / gamma
