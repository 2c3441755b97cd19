"""Disorder ensembles and the deformed (spiked) matrix.

Entries are generated from a counter-based Philox stream keyed by
``(seed, stream)``, one 64-bit word per entry, so entry ``(i, j)`` of a
matrix can be regenerated on its own from the seed.  Off-diagonal entries
use stream 0 (upper triangle, row-major), the diagonal uses stream 1.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

OFFDIAG_STREAM = 0
DIAG_STREAM = 1


class EntryKind(str, enum.Enum):
    GAUSSIAN = "gaussian"
    RADEMACHER = "rademacher"
    TWO_POINT = "two_point"


@dataclass(frozen=True)
class EntryDistribution:
    """Mean-zero, unit-variance entry law.

    ``w2`` is the second moment of the diagonal entries, which are drawn as
    ``sqrt(w2)`` times an independent copy of the same unit law.  For
    ``two_point`` the law is ``sqrt((1-p)/p)`` with probability ``p`` and
    ``-sqrt(p/(1-p))`` otherwise.
    """

    kind: EntryKind
    w2: float = 2.0
    p: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "kind", EntryKind(self.kind))
        if not 0.0 < self.p < 1.0:
            raise ValueError(f"p must lie in (0, 1), got {self.p}")
        if self.w2 < 0:
            raise ValueError(f"w2 must be nonnegative, got {self.w2}")

    @property
    def W3(self) -> float:
        if self.kind is EntryKind.TWO_POINT:
            p = self.p
            return (1 - 2 * p) / math.sqrt(p * (1 - p))
        return 0.0

    @property
    def W4(self) -> float:
        if self.kind is EntryKind.GAUSSIAN:
            return 3.0
        if self.kind is EntryKind.RADEMACHER:
            return 1.0
        p = self.p
        return ((1 - p) ** 3 + p ** 3) / (p * (1 - p))

    @property
    def label(self) -> str:
        if self.kind is EntryKind.GAUSSIAN and self.w2 == 2.0:
            return "GOE"
        if self.kind is EntryKind.TWO_POINT:
            return f"two_point(p={self.p:.12g})"
        return self.kind.value

    def from_uniform(self, u: np.ndarray) -> np.ndarray:
        """Map uniforms in (0, 1) to unit-variance draws (one uniform each)."""
        if self.kind is EntryKind.GAUSSIAN:
            return ndtri(u)
        if self.kind is EntryKind.RADEMACHER:
            return np.where(u < 0.5, 1.0, -1.0)
        p = self.p
        hi, lo = math.sqrt((1 - p) / p), -math.sqrt(p / (1 - p))
        return np.where(u < p, hi, lo)

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "w2": self.w2, "p": self.p,
                "W3": self.W3, "W4": self.W4, "label": self.label}


def goe() -> EntryDistribution:
    return EntryDistribution(EntryKind.GAUSSIAN, w2=2.0)


def gaussian(w2: float = 2.0) -> EntryDistribution:
    return EntryDistribution(EntryKind.GAUSSIAN, w2=w2)


def rademacher(w2: float = 2.0) -> EntryDistribution:
    return EntryDistribution(EntryKind.RADEMACHER, w2=w2)


def make_two_point(W3_target: float, w2: float = 2.0) -> EntryDistribution:
    """Two-point law with third moment ``W3_target``.

    Solving ``(1 - 2p) / sqrt(p (1 - p)) = W`` gives
    ``p = (1 - W / sqrt(W**2 + 4)) / 2``; the fourth moment is then fixed at
    ``W**2 + 1``.
    """
    W = float(W3_target)
    if not math.isfinite(W):
        raise ValueError(f"W3_target must be finite, got {W3_target}")
    p = 0.5 * (1.0 - W / math.sqrt(W * W + 4.0))
    return EntryDistribution(EntryKind.TWO_POINT, w2=w2, p=p)


@dataclass(frozen=True)
class EnsembleConfig:
    N: int
    J: float
    dist: EntryDistribution = field(default_factory=goe)
    seed: int = 0
    # Unit law for the diagonal before scaling by sqrt(dist.w2); None reuses dist.
    diagonal_dist: EntryDistribution | None = None

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N}")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def w2(self) -> float:
        return self.dist.w2

    @property
    def diagonal_law(self) -> EntryDistribution:
        return self.dist if self.diagonal_dist is None else self.diagonal_dist

    def with_seed(self, seed: int) -> "EnsembleConfig":
        return EnsembleConfig(self.N, self.J, self.dist, seed, self.diagonal_dist)

    def to_dict(self) -> dict:
        out = {"N": self.N, "J": self.J, "seed": self.seed, "dist": self.dist.to_dict()}
        if self.diagonal_dist is not None:
            out["diagonal_dist"] = self.diagonal_dist.to_dict()
        return out


@dataclass(frozen=True, eq=False)
class DisorderMatrix:
    entries: np.ndarray
    config: EnsembleConfig

    @property
    def N(self) -> int:
        return self.entries.shape[0]


def _uniforms(seed: int, stream: int, count: int, start: int = 0) -> np.ndarray:
    bitgen = np.random.Philox(key=[seed, stream])
    if start:
        bitgen.advance(start // 4)
        raw = bitgen.random_raw(start % 4 + count)[start % 4:]
    else:
        raw = bitgen.random_raw(count)
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0 ** -53


def _upper_index(i: int, j: int, N: int) -> int:
    # row-major position of (i, j), i < j, among strictly-upper entries
    return i * (2 * N - i - 1) // 2 + (j - i - 1)


def sample_wigner(config: EnsembleConfig) -> DisorderMatrix:
    """Symmetric disorder matrix; deterministic in ``config``."""
    N = config.N
    A = np.empty((N, N))
    n_off = N * (N - 1) // 2
    if n_off:
        iu = np.triu_indices(N, 1)
        vals = config.dist.from_uniform(_uniforms(config.seed, OFFDIAG_STREAM, n_off))
        A[iu] = vals
        A[iu[1], iu[0]] = vals
    diag = config.diagonal_law.from_uniform(_uniforms(config.seed, DIAG_STREAM, N))
    A[np.diag_indices(N)] = math.sqrt(config.w2) * diag
    return DisorderMatrix(A, config)


def entry(config: EnsembleConfig, i: int, j: int) -> float:
    """Regenerate the single entry ``A[i, j]`` without sampling the matrix."""
    N = config.N
    if not (0 <= i < N and 0 <= j < N):
        raise IndexError(f"entry ({i}, {j}) outside a {N}x{N} matrix")
    if i == j:
        u = _uniforms(config.seed, DIAG_STREAM, 1, start=i)
        return float(math.sqrt(config.w2) * config.diagonal_law.from_uniform(u)[0])
    i, j = min(i, j), max(i, j)
    u = _uniforms(config.seed, OFFDIAG_STREAM, 1, start=_upper_index(i, j, N))
    return float(config.dist.from_uniform(u)[0])


def assemble_deformed(A: DisorderMatrix) -> np.ndarray:
    """``M = A / sqrt(N) + (J / N) 1 1^T``, exactly symmetric."""
    N = A.N
    M = A.entries / math.sqrt(N) + A.config.J / N
    # the scaled matrix inherits exact symmetry from A; enforce it anyway
    return np.triu(M) + np.triu(M, 1).T
