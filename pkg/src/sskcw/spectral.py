"""Eigenvalues of the deformed matrix and the observables built on them."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg

from .errors import ConvergenceError

TestFunction = Callable[[np.ndarray], np.ndarray]


def hat_J(J: float) -> float:
    """Classical location ``J + 1/J`` of the top eigenvalue for ``J > 1``."""
    return J + 1.0 / J


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Eigenvalues sorted descending, with the coupling they came from."""

    values: np.ndarray
    J: float
    seed: int | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("a spectrum needs a nonempty 1-d array of eigenvalues")
        if np.any(np.diff(v) > 0):
            raise ValueError("eigenvalues must be sorted in descending order")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def N(self) -> int:
        return self.values.size

    @property
    def lambda1(self) -> float:
        return float(self.values[0])

    @property
    def bulk(self) -> np.ndarray:
        return self.values[1:]


def _check_symmetric(M: np.ndarray) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    scale = max(1.0, float(np.max(np.abs(M)))) if M.size else 1.0
    if np.max(np.abs(M - M.T), initial=0.0) > 1e-12 * scale:
        raise ValueError("matrix is not symmetric")
    return M


def eigenvalues(M: np.ndarray, J: float = float("nan"), seed: int | None = None) -> Spectrum:
    """Full spectrum of a symmetric matrix, values only.

    LAPACK ``dsyev`` path: Householder reduction to tridiagonal form followed
    by implicit-shift QL/QR (root-free when no vectors are requested).
    """
    M = _check_symmetric(M)
    vals = scipy.linalg.eigh(M, eigvals_only=True, driver="ev", check_finite=True)
    return Spectrum(vals[::-1], J, seed)


def eigen_decomposition(M: np.ndarray, J: float = float("nan")) -> tuple[Spectrum, np.ndarray]:
    """Spectrum plus eigenvectors (columns aligned with the descending values)."""
    M = _check_symmetric(M)
    vals, vecs = scipy.linalg.eigh(M, driver="ev")
    return Spectrum(vals[::-1], J), vecs[:, ::-1]


def chi_N(s: Spectrum) -> float:
    """Rescaled top-eigenvalue fluctuation ``sqrt(N) (lambda_1 - J - 1/J)``."""
    if not s.J > 1:
        raise ValueError(f"chi_N needs J > 1, got {s.J}")
    return math.sqrt(s.N) * (s.lambda1 - hat_J(s.J))


def _semicircle_rule(n: int, phi: TestFunction) -> float:
    # Chebyshev-Gauss (second kind) after x = 2 cos(theta): exact to degree 2n - 1
    theta = np.arange(1, n + 1) * (math.pi / (n + 1))
    vals = np.asarray(phi(2.0 * np.cos(theta)), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise ValueError("test function is not finite on the semicircle nodes")
    return float(2.0 / (n + 1) * np.dot(np.sin(theta) ** 2, vals))


def semicircle_integral(phi: TestFunction, n: int = 2048, tol: float = 1e-12,
                        max_n: int = 2 ** 20) -> float:
    """``int phi(x) sqrt(4 - x^2) / (2 pi) dx`` over ``[-2, 2]``.

    The node count doubles from ``n`` until two successive estimates agree
    to ``tol``.
    """
    prev = _semicircle_rule(n, phi)
    while n < max_n:
        n *= 2
        cur = _semicircle_rule(n, phi)
        if abs(cur - prev) < tol:
            return cur
        prev = cur
    raise ConvergenceError(f"semicircle quadrature not converged at {n} nodes")


def full_linear_statistic(s: Spectrum, phi: TestFunction) -> float:
    """``sum_i phi(lambda_i) - N int phi d sigma``."""
    return float(np.sum(phi(s.values))) - s.N * semicircle_integral(phi)


def partial_linear_statistic(s: Spectrum, phi: TestFunction) -> float:
    """Same as the full statistic with the top eigenvalue's term removed."""
    return float(np.sum(phi(s.bulk))) - s.N * semicircle_integral(phi)


def semicircle_cdf(x):
    x = np.clip(np.asarray(x, dtype=float), -2.0, 2.0)
    return 0.5 + x * np.sqrt(4.0 - x * x) / (4 * math.pi) + np.arcsin(x / 2) / math.pi


def _invert_cdf(target: np.ndarray) -> np.ndarray:
    # bisection to 1e-13, then one Newton step where the density is not tiny
    lo = np.full(target.shape, -2.0)
    hi = np.full(target.shape, 2.0)
    for _ in range(46):
        mid = 0.5 * (lo + hi)
        below = semicircle_cdf(mid) < target
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    x = 0.5 * (lo + hi)
    rho = np.sqrt(np.maximum(4.0 - x * x, 0.0)) / (2 * math.pi)
    safe = rho > 1e-8
    step = np.where(safe, (semicircle_cdf(x) - target) / np.where(safe, rho, 1.0), 0.0)
    return np.where(np.abs(step) < 1e-12, x - step, x)


def semicircle_quantile(k: int, N: int) -> float:
    """Classical location: ``sigma([gamma_k, inf)) = (k - 1/2) / N``."""
    if not 1 <= k <= N:
        raise ValueError(f"need 1 <= k <= N, got k={k}, N={N}")
    return float(_invert_cdf(np.array([1.0 - (k - 0.5) / N]))[0])


def classical_locations(N: int) -> np.ndarray:
    """``gamma_1 > ... > gamma_N`` for an ``N``-point spectrum."""
    k = np.arange(1, N + 1)
    return _invert_cdf(1.0 - (k - 0.5) / N)


@dataclass(frozen=True, eq=False)
class RigidityReport:
    classical_locations: np.ndarray
    max_bulk_deviation: float
    edge_deviation: float
    threshold: float

    @property
    def violation(self) -> bool:
        return self.max_bulk_deviation > self.threshold


def rigidity_report(s: Spectrum, eps0: float = 0.25,
                    gammas: np.ndarray | None = None) -> RigidityReport:
    """Eigenvalue deviations from classical locations in edge-adapted units.

    Bulk: ``max_{k>=2} khat^{1/3} N^{2/3} |lambda_k - gamma_k|`` with
    ``khat = min(k, N + 1 - k)``; edge: ``sqrt(N) |lambda_1 - J - 1/J|``.
    The violation flag (``bulk > N**eps0``) is a diagnostic convention.
    """
    if not s.J > 1:
        raise ValueError(f"rigidity report needs J > 1, got {s.J}")
    N = s.N
    g = classical_locations(N) if gammas is None else np.asarray(gammas)
    if N > 1:
        k = np.arange(2, N + 1)
        khat = np.minimum(k, N + 1 - k)
        bulk = float(np.max(khat ** (1 / 3) * N ** (2 / 3) * np.abs(s.bulk - g[1:])))
    else:
        bulk = 0.0
    edge = math.sqrt(N) * abs(s.lambda1 - hat_J(s.J))
    return RigidityReport(g, bulk, edge, N ** eps0)


def stieltjes(z):
    """Semicircle Stieltjes transform ``(-z + sqrt(z^2 - 4)) / 2``.

    The square root is taken as ``sqrt(z - 2) sqrt(z + 2)`` so the result
    vanishes at infinity; points of ``[-2, 2]`` are rejected.
    """
    z = np.asarray(z, dtype=complex)
    if np.any((z.imag == 0) & (np.abs(z.real) <= 2)):
        raise ValueError("the Stieltjes transform is undefined on [-2, 2]")
    out = 0.5 * (-z + np.sqrt(z - 2) * np.sqrt(z + 2))
    return out[()] if out.ndim == 0 else out
