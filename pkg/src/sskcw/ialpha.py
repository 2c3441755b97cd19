r"""The oscillatory integral

    I_m(alpha) = \int t^m (1 + i t)^{-1/2} exp(-alpha t^2 / 4 + i t / 2) dt

over the real line (principal square root), and ``I = I_0``.

Writing ``(1 + i t)^{-1/2} = (1 + t^2)^{-1/4} exp(-i arctan(t) / 2)`` gives a
real integrand on ``[0, inf)`` with phase ``(t - arctan t) / 2``; for even
``m`` it carries ``cos``, for odd ``m`` ``i sin``.  The half-line is cut where
the Gaussian envelope drops below ``e^{-45}`` and split into panels no wider
than ``pi`` or the Gaussian scale, each integrated by Gauss-Legendre.
"""

from __future__ import annotations

import functools
import math

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ConvergenceError

_NODES, _WEIGHTS = np.polynomial.legendre.leggauss(20)
_LOG_CUT = 45.0

# log I is tabulated on this alpha range; outside it the quadrature runs directly
TABLE_RANGE = (1e-6, 1e8)
TABLE_SIZE = 1601


def _cutoff(alpha: float, m: int) -> float:
    T = math.sqrt(4 * _LOG_CUT / alpha)
    for _ in range(50):
        T_new = math.sqrt(4 * (_LOG_CUT + m * math.log(max(T, 1.0))) / alpha)
        if abs(T_new - T) <= 1e-12 * T:
            break
        T = T_new
    return T


def _panel_sum(alpha: float, m: int, T: float, width: float) -> float:
    n = max(1, int(math.ceil(T / width)))
    edges = np.linspace(0.0, T, n + 1)
    a, b = edges[:-1, None], edges[1:, None]
    t = 0.5 * (b - a) * _NODES + 0.5 * (a + b)
    w = 0.5 * (b - a) * _WEIGHTS
    phase = 0.5 * (t - np.arctan(t))
    env = np.exp(-0.25 * alpha * t * t) * (1.0 + t * t) ** -0.25
    if m:
        env = env * t ** m
    f = env * (np.cos(phase) if m % 2 == 0 else np.sin(phase))
    return 2.0 * float(np.sum(f * w))


def I_m(alpha: float, m: int = 0, rtol: float = 1e-10) -> complex:
    """``I_m(alpha)`` for ``alpha > 0`` and integer ``m >= 0``.

    Raises ConvergenceError if halving the panel width changes the value by
    more than ``rtol`` relative to the integrand's scale.
    """
    alpha = float(alpha)
    if not alpha > 0 or not math.isfinite(alpha):
        raise ValueError(f"alpha must be positive and finite, got {alpha}")
    if int(m) != m or m < 0:
        raise ValueError(f"m must be a nonnegative integer, got {m}")
    m = int(m)
    T = _cutoff(alpha, m)
    width = min(math.pi, math.sqrt(2.0 / alpha))
    coarse = _panel_sum(alpha, m, T, width)
    fine = _panel_sum(alpha, m, T, 0.5 * width)
    # m > 0 values can vanish by symmetry-free cancellation; scale by the envelope
    scale = max(abs(fine), _envelope_mass(alpha, m))
    if abs(fine - coarse) > rtol * scale:
        raise ConvergenceError(f"I_{m}({alpha}) unstable: {coarse!r} vs {fine!r}")
    return complex(fine) if m % 2 == 0 else complex(0.0, fine)


def _envelope_mass(alpha: float, m: int) -> float:
    # int_0^inf t^m e^{-alpha t^2/4} dt, a bound on the oscillatory part's size
    return 0.5 * math.gamma((m + 1) / 2) * (4.0 / alpha) ** ((m + 1) / 2) * 1e-6


def I_alpha(alpha: float) -> float:
    """Real value ``I(alpha) = I_0(alpha)``."""
    return I_m(alpha, 0).real


@functools.lru_cache(maxsize=1)
def _log_I_table() -> CubicSpline:
    lo, hi = TABLE_RANGE
    x = np.linspace(math.log(lo), math.log(hi), TABLE_SIZE)
    y = np.array([math.log(I_alpha(math.exp(v))) for v in x])
    return CubicSpline(x, y)


def log_I(alpha):
    """Vectorized ``log I(alpha)``; spline in ``log alpha`` inside TABLE_RANGE."""
    a = np.asarray(alpha, dtype=float)
    if np.any(~(a > 0)):
        raise ValueError("alpha must be positive")
    out = np.empty(a.shape)
    lo, hi = TABLE_RANGE
    inside = (a >= lo) & (a <= hi)
    if np.any(inside):
        out[inside] = _log_I_table()(np.log(a[inside]))
    for idx in zip(*np.nonzero(~inside)) if a.ndim else ([()] if not inside else []):
        out[idx] = math.log(I_alpha(float(a[idx])))
    return out[()] if out.ndim == 0 else out


def large_alpha_asymptote(alpha):
    """Leading behaviour ``sqrt(4 pi / alpha)`` as ``alpha -> inf``."""
    return np.sqrt(4 * np.pi / np.asarray(alpha, dtype=float))


SMALL_ALPHA_LIMIT = math.sqrt(8 * math.pi / math.e)
