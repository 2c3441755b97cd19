"""Closed-form asymptotics at the ferromagnetic/paramagnetic transition.

Inverse temperature in the critical window: ``2 beta = 1/J + B / sqrt(N)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from .errors import ConvergenceError
from .ialpha import I_m, log_I
from .spectral import hat_J, semicircle_integral

__all__ = [
    "TransitionParams", "BivariateGaussianLaw", "CltParams", "Regime",
    "I_m", "s_of_x", "s_minus_x", "Q_of_x", "tau_ell", "tau_coefficients", "clt_params",
    "transition_law", "sample_transition_limit", "limit_law_moments",
    "limiting_free_energy", "transitional_centering", "tilde_F_transitional",
    "log_semicircle_mean", "phi_by_name", "TEST_FUNCTIONS",
    "paramagnetic_fluctuation_params", "ferromagnetic_fluctuation_params",
]


@dataclass(frozen=True)
class TransitionParams:
    J: float
    B: float = 0.0

    def __post_init__(self):
        if not self.J > 1:
            raise ValueError(f"the transition window needs J > 1, got J={self.J}")

    @property
    def c(self) -> float:
        """``J^2 - 1``, the recurring scale of the window."""
        return self.J * self.J - 1.0

    def beta(self, N: int) -> float:
        return 0.5 * (1.0 / self.J + self.B / math.sqrt(N))


@dataclass(frozen=True)
class BivariateGaussianLaw:
    mean1: float
    mean2: float
    var1: float
    var2: float
    cov: float

    def __post_init__(self):
        if self.var1 < 0 or self.var2 < 0 or self.var1 * self.var2 - self.cov ** 2 < -1e-12:
            raise ValueError("covariance matrix is not positive semidefinite")

    @property
    def mean(self) -> np.ndarray:
        return np.array([self.mean1, self.mean2])

    @property
    def covariance(self) -> np.ndarray:
        return np.array([[self.var1, self.cov], [self.cov, self.var2]])

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class CltParams:
    mean: float
    variance: float
    kind: str

    def to_dict(self) -> dict:
        return asdict(self)


# ---------------------------------------------------------------- Q and friends

def s_of_x(x, p: TransitionParams):
    """``(x - B c + sqrt((x + B c)^2 + 4 c)) / 2`` with ``c = J^2 - 1``.

    Satisfies ``B + s / c = 1 / (s - x)``.  Both ``s`` and ``s - x`` are
    evaluated in whichever of two algebraically equal forms avoids cancellation.
    """
    x = np.asarray(x, dtype=float)
    c = p.c
    u = x + p.B * c
    v = x - p.B * c
    root = np.sqrt(u * u + 4 * c)
    # s (root - v) = 2 c (1 + B x); use it where v + root would cancel
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(v >= 0, 0.5 * (v + root), 2 * c * (1 + p.B * x) / (root - v))
    return s[()] if s.ndim == 0 else s


def s_minus_x(x, p: TransitionParams):
    """``s(x) - x`` without the cancellation of a direct subtraction (always > 0)."""
    x = np.asarray(x, dtype=float)
    c = p.c
    u = x + p.B * c
    root = np.sqrt(u * u + 4 * c)
    # root - u and 4c / (root + u) are equal; pick whichever does not cancel
    d = np.where(u > 0, 2 * c / (root + np.abs(u)), 0.5 * (root - u))
    return d


def Q_of_x(x, p: TransitionParams):
    """Transitional functional of the top-eigenvalue fluctuation.

    ``s/(2(s-x)) - s^2/(4c) + log(s-x)/2 + log I((s-x)^2/c)``.  Vectorized.
    """
    x = np.asarray(x, dtype=float)
    c = p.c
    d = s_minus_x(x, p)
    s = x + d
    q = s / (2 * d) - s * s / (4 * c) + 0.5 * np.log(d) + log_I(d * d / c)
    q = np.asarray(q)
    return q[()] if q.ndim == 0 else q


# ---------------------------------------------------------------- linear statistics

def tau_coefficients(phi: Callable, lmax: int, tol: float = 1e-13) -> np.ndarray:
    """``tau_0..tau_lmax`` of ``phi(2 cos theta)`` by the periodic trapezoid rule.

    The grid doubles until the coefficients stop moving (spectral accuracy
    for analytic ``phi``).
    """
    n = max(256, 4 * (lmax + 1))
    prev = None
    while n <= 2 ** 18:
        theta = 2 * np.pi * np.arange(n) / n
        vals = np.asarray(phi(2 * np.cos(theta)), dtype=float)
        if not np.all(np.isfinite(vals)):
            raise ValueError("test function is not finite on [-2, 2]")
        coef = np.fft.rfft(vals).real / n
        coef = coef[: lmax + 1]
        if prev is not None and np.max(np.abs(coef - prev)) < tol:
            return coef
        prev = coef
        n *= 2
    raise ConvergenceError("Chebyshev coefficients did not converge")


def tau_ell(phi: Callable, ell: int) -> float:
    """``(1/2pi) int phi(2 cos theta) cos(ell theta) d theta``."""
    if ell < 0:
        raise ValueError("ell must be nonnegative")
    return float(tau_coefficients(phi, ell)[ell])


def clt_params(phi: Callable, kind: str, J: float, w2: float = 2.0, W3: float = 0.0,
               W4: float = 3.0, lmax: int = 200, tol: float = 1e-14) -> CltParams:
    """Limiting mean and variance of the full or partial linear statistic.

    ``kind="partial"`` drops the top eigenvalue; its mean differs from the
    full one by ``phi(J + 1/J)`` and the variance is shared.  ``W3`` does not
    enter but is accepted so callers can pass a whole moment set.
    """
    if kind not in ("full", "partial"):
        raise ValueError(f"kind must be 'full' or 'partial', got {kind!r}")
    tau = tau_coefficients(phi, lmax)
    ell = np.arange(lmax + 1)
    mean_terms = J ** -ell[2:] * tau[2:]
    var_terms = ell[1:] * tau[1:] ** 2
    small = (np.abs(J ** -ell * tau) < tol) & (ell * tau ** 2 < tol)
    # need a settled tail: every coefficient beyond the cut below tolerance
    settled = np.nonzero(~small)[0]
    last = settled[-1] if settled.size else 0
    if last >= lmax - 4:
        raise ConvergenceError("linear-statistic series did not converge; is phi analytic on [-2, 2]?")
    edge = float(phi(np.array([2.0, -2.0])).sum())
    mean = (0.25 * edge - 1.5 * tau[0] - tau[1] / J + (w2 - 2) * tau[2]
            + (W4 - 3) * tau[4] - float(np.sum(mean_terms)))
    if kind == "full":
        at_spike = float(phi(np.array([hat_J(J)]))[0])
        if not math.isfinite(at_spike):
            raise ValueError("the full statistic needs phi finite at J + 1/J")
        mean += at_spike
    variance = (w2 - 2) * tau[1] ** 2 + 2 * (W4 - 3) * tau[2] ** 2 + 2 * float(np.sum(var_terms))
    return CltParams(float(mean), float(variance), kind)


def log_semicircle_mean(J: float) -> float:
    """``int log(J + 1/J - x) d sigma(x) = 1/(2 J^2) + log J``."""
    return 1.0 / (2 * J * J) + math.log(J)


def phi_by_name(name: str, J: float) -> Callable[[np.ndarray], np.ndarray]:
    """Named test functions used by experiments and the CLI."""
    Jh = hat_J(J)
    if name == "g":
        return lambda x: np.log(Jh - np.asarray(x, dtype=float))
    if name == "x":
        return lambda x: np.asarray(x, dtype=float)
    if name == "x2":
        return lambda x: np.asarray(x, dtype=float) ** 2
    if name == "log_spike":
        # analytic on [-2, J + 1/J], so both full and partial limits apply
        return lambda x: np.log(Jh + 1.0 - np.asarray(x, dtype=float))
    raise KeyError(f"unknown test function {name!r}; choose from {TEST_FUNCTIONS}")


TEST_FUNCTIONS = ("g", "x", "x2", "log_spike")


# ---------------------------------------------------------------- transition law

def transition_law(p: TransitionParams, w2: float = 2.0, W3: float = 0.0,
                   W4: float = 3.0) -> BivariateGaussianLaw:
    """Joint Gaussian limit of the bulk part and the top-eigenvalue part."""
    J = p.J
    a, b = J ** -2, J ** -4
    corr = (w2 - 2) * a / 4 + (W4 - 3) * b / 8
    return BivariateGaussianLaw(
        mean1=0.25 * math.log(J * J - 1) + corr + math.log(1 / (2 * math.sqrt(math.pi) * J)),
        mean2=W3 * (a - b),
        var1=-0.5 * math.log(1 - a) + corr,
        var2=2 * (1 - a),
        cov=W3 * (a - b) / 2,
    )


def sample_transition_limit(p: TransitionParams, law: BivariateGaussianLaw, n: int,
                            seed: int = 0) -> np.ndarray:
    """``n`` draws of ``G1 + Q(G2)``; deterministic in ``seed``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.Generator(np.random.Philox(key=[seed, 2]))
    z = rng.standard_normal((n, 2))
    s2 = math.sqrt(law.var2)
    g2 = law.mean2 + s2 * z[:, 1]
    if law.var2 > 0:
        slope = law.cov / law.var2
        resid = max(law.var1 - law.cov * slope, 0.0)
    else:
        slope, resid = 0.0, law.var1
    g1 = law.mean1 + slope * (g2 - law.mean2) + math.sqrt(resid) * z[:, 0]
    return g1 + np.asarray(Q_of_x(g2, p))


def limit_law_moments(p: TransitionParams, law: BivariateGaussianLaw,
                      nodes: int = 160) -> tuple[float, float]:
    """Mean and variance of ``G1 + Q(G2)`` by Gauss-Hermite quadrature in ``G2``.

    ``G1`` enters through its regression on ``G2``:
    ``Cov(G1, Q) = (cov / var2) Cov(G2, Q)``.
    """
    x, w = np.polynomial.hermite_e.hermegauss(nodes)
    w = w / w.sum()
    s2 = math.sqrt(law.var2)
    g2 = law.mean2 + s2 * x
    q = np.asarray(Q_of_x(g2, p))
    eq = float(w @ q)
    var_q = float(w @ (q - eq) ** 2)
    cov_g2_q = float(w @ ((g2 - law.mean2) * (q - eq)))
    slope = law.cov / law.var2 if law.var2 > 0 else 0.0
    mean = law.mean1 + eq
    var = law.var1 + var_q + 2 * slope * cov_g2_q
    return mean, var


# ---------------------------------------------------------------- free energies

class Regime(str, enum.Enum):
    SPIN_GLASS = "spin_glass"
    PARAMAGNETIC = "paramagnetic"
    FERROMAGNETIC = "ferromagnetic"


def classify_regime(beta: float, J: float) -> Regime:
    """Largest of ``{1, 1/(2 beta), J}``.

    Ties go to the lower-temperature side: ferromagnetic on ``2 beta J = 1``
    (and on ``J = 1`` against the spin glass), spin glass on ``beta = 1/2``.
    """
    if not (beta > 0 and J > 0):
        raise ValueError("beta and J must be positive")
    inv = 1.0 / (2 * beta)
    if J >= 1 and J >= inv:
        return Regime.FERROMAGNETIC
    if 1 >= inv:
        return Regime.SPIN_GLASS
    return Regime.PARAMAGNETIC


def _ordered_free_energy(beta: float, Jt: float) -> float:
    return beta * (Jt + 1 / Jt) - 0.5 * math.log(2 * beta * Jt) - 1 / (4 * Jt * Jt) - 0.5


def limiting_free_energy(beta: float, J: float) -> tuple[float, Regime]:
    """Deterministic large-N free energy and its regime label."""
    regime = classify_regime(beta, J)
    if regime is Regime.PARAMAGNETIC:
        return beta * beta, regime
    return _ordered_free_energy(beta, max(J, 1.0)), regime


def paramagnetic_fluctuation_params(beta: float, J: float, w2: float = 2.0,
                                    W4: float = 3.0) -> tuple[float, float]:
    """Mean and variance of ``N (F_N - beta^2)`` deep in the paramagnetic phase."""
    b2 = beta * beta
    base = b2 * (w2 - 2) + 2 * b2 * b2 * (W4 - 3)
    f1 = 0.25 * math.log(1 - 4 * b2) + base - 0.5 * math.log(1 - 2 * beta * J)
    a1 = -0.5 * math.log(1 - 4 * b2) + base
    return f1, a1


def ferromagnetic_fluctuation_params(J: float, W3: float = 0.0) -> tuple[float, float]:
    """Mean and variance of the Gaussian multiplying ``(beta - 1/(2J)) / sqrt(N)``."""
    return W3 * (J ** -2 - J ** -4), 2 * (1 - J ** -2)


def transitional_centering(N: int, p: TransitionParams) -> float:
    """Deterministic part ``1/(4J^2) + B/(2J sqrt N) + log N/(4N) + B^2 J^2/(4N)``."""
    J, B = p.J, p.B
    return 1 / (4 * J * J) + B / (2 * J * math.sqrt(N)) + math.log(N) / (4 * N) + B * B * J * J / (4 * N)


def tilde_F_transitional(N: int, beta: float, J: float) -> float:
    """``beta (J + 1/J) - 1/2 - log(2 beta)/2 + (log N / 4 + log(beta / sqrt pi)) / N``."""
    if not (beta > 0 and J > 1):
        raise ValueError("need beta > 0 and J > 1")
    return (beta * hat_J(J) - 0.5 - 0.5 * math.log(2 * beta)
            + (0.25 * math.log(N) + math.log(beta / math.sqrt(math.pi))) / N)


def semicircle_log_check(J: float) -> float:
    """Quadrature value of ``int log(J + 1/J - x) d sigma`` (cross-check helper)."""
    Jh = hat_J(J)
    return semicircle_integral(lambda x: np.log(Jh - x))
