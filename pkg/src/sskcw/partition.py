"""Free energy of the spherical SSK+CW model from a spectrum.

The partition function over the sphere of radius sqrt(N) reduces to a
vertical-line integral

    Z = Gamma(N/2) / (2 pi i (N beta)^{N/2-1}) * int exp((N/2) G(z)) dz,
    G(z) = 2 beta z - (1/N) sum_i log(z - lambda_i),

for any abscissa above the top eigenvalue.  Everything is kept in log
space with the value at the abscissa factored out.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np
from scipy import integrate, optimize
from scipy.special import gammaln, logsumexp

from .analytics import Q_of_x, Regime, TransitionParams, classify_regime, tilde_F_transitional
from .errors import ConvergenceError, RigidityViolation
from .ialpha import I_alpha
from .spectral import Spectrum, hat_J

# integrand modulus below exp(-_LOG_CUT) of the peak is dropped
_LOG_CUT = 40.0


def G_and_derivatives(s: Spectrum, beta: float, z, order: int = 3) -> tuple:
    """``(G, G', G'', G''')[:order + 1]`` at ``z``.

    Real ``z`` must exceed the top eigenvalue; complex ``z`` off the real axis
    uses the principal logarithm.
    """
    if order not in (0, 1, 2, 3):
        raise ValueError("order must be 0..3")
    lam = s.values
    if np.iscomplexobj(z) and complex(z).imag != 0:
        d = complex(z) - lam
    else:
        z = float(np.real(z))
        if not z > s.lambda1:
            raise ValueError(f"real z must exceed lambda_1 = {s.lambda1}, got {z}")
        d = z - lam
    out = [2 * beta * z - np.mean(np.log(d))]
    if order >= 1:
        out.append(2 * beta - np.mean(1 / d))
    if order >= 2:
        out.append(np.mean(d ** -2.0))
    if order >= 3:
        out.append(-2 * np.mean(d ** -3.0))
    return tuple(out)


@dataclass(frozen=True)
class CriticalPoint:
    gamma: float
    offset: float  # gamma - lambda_1, solved for directly to keep relative precision
    s_N: float
    Delta: float
    Fpp: float
    residual: float

    @property
    def sd_argument(self) -> float:
        """``F''(gamma) Delta^2``, the argument of ``I`` in the saddle-point formula."""
        return self.Fpp * self.Delta ** 2


def _gap_sums(gaps: np.ndarray, u: float, N: int) -> float:
    return float(np.sum(1.0 / (u + gaps))) / N


def critical_point(s: Spectrum, beta: float) -> CriticalPoint:
    """Unique root of ``G'`` on ``(lambda_1, inf)``.

    Solved in the offset ``u = gamma - lambda_1``: the bracket grows
    geometrically from ``1e-12`` until ``G'`` changes sign, then Brent's
    method and a final Newton polish.
    """
    if not beta > 0:
        raise ValueError("beta must be positive")
    N = s.N
    gaps = s.lambda1 - s.values  # >= 0, gaps[0] == 0

    def gp(u):
        return 2 * beta - _gap_sums(gaps, u, N)

    lo = 1e-12
    while gp(lo) >= 0:
        lo *= 1e-3
        if lo < 1e-300:
            raise ConvergenceError("could not bracket the critical point from below")
    hi = max(1e-12, 1.0 / (2 * beta * N))
    while gp(hi) < 0:
        hi *= 2
        if hi > 1e300:
            raise ConvergenceError("could not bracket the critical point from above")
    u = optimize.brentq(gp, max(lo, hi / 2 if gp(hi / 2) < 0 else lo), hi,
                        xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    d2 = float(np.sum((u + gaps) ** -2.0)) / N
    u_new = u - gp(u) / d2
    if u_new > 0 and abs(gp(u_new)) <= abs(gp(u)):
        u = u_new
    gamma = s.lambda1 + u
    sq = math.sqrt(N)
    Fpp = float(np.sum((u + gaps[1:]) ** -2.0)) / N
    s_N = sq * (gamma - hat_J(s.J)) if s.J > 1 else float("nan")
    return CriticalPoint(gamma=gamma, offset=u, s_N=s_N, Delta=sq * u, Fpp=Fpp,
                         residual=abs(gp(u)))


def _log_prefactor(N: int, beta: float) -> float:
    # log of C_N * i: Gamma(N/2) / (2 pi (N beta)^{N/2 - 1})
    return gammaln(N / 2) - (N / 2 - 1) * math.log(N * beta) - math.log(2 * math.pi)


def contour_log_partition(s: Spectrum, beta: float, abscissa: float | None = None) -> float:
    """``log Z_N`` by quadrature along ``Re z = abscissa`` (default: critical point).

    With ``z = c + i t`` and ``d_i = c - lambda_i``,
    ``exp((N/2)(G(z) - G(c))) = exp(i beta N t) prod_i (1 + i t / d_i)^{-1/2}``;
    conjugate symmetry leaves twice the real part on ``[0, inf)``.  When the
    vertical modulus decays too slowly (small ``N``), the path leaves the line
    at ``c + i t0`` along the ray of angle ``3 pi / 4``, where ``exp(beta N z)``
    decays exponentially; the ray stays in the upper half-plane, so no branch
    cut is crossed.
    """
    N = s.N
    gaps = s.lambda1 - s.values
    if abscissa is None:
        u = critical_point(s, beta).offset
    else:
        u = float(abscissa) - s.lambda1
        if not u > 0:
            raise ValueError("abscissa must exceed lambda_1")
    d = u + gaps
    inv_d = 1.0 / d
    omega = beta * N

    def vertical(t):
        return (np.exp(1j * omega * t - 0.5 * np.sum(np.log1p(1j * t * inv_d)))).real

    def log_mod(t):
        return -0.25 * float(np.sum(np.log1p((t * inv_d) ** 2)))

    t_cap = 20.0 * float(d.max()) + 20.0 / omega
    T = float(d.min())
    while log_mod(T) > -_LOG_CUT and T < t_cap:
        T = min(2 * T, t_cap)
    pieces = [(vertical, _breakpoints(T, omega, d))]
    if log_mod(T) > -_LOG_CUT:
        direction = np.exp(0.75j * np.pi)
        start = 1j * T  # relative to c

        def ray(r):
            w = start + r * direction  # z - c
            h = omega * w - 0.5 * np.sum(np.log1p(w * inv_d))
            return (np.exp(h) * direction / 1j).real

        R = math.sqrt(2) * (_LOG_CUT + 5) / omega + T
        while abs(ray(R)) > math.exp(-_LOG_CUT) and R < 1e8:
            R *= 2
        pieces.append((ray, _breakpoints(R, omega, d)))
    total = err = 0.0
    with warnings.catch_warnings():
        # convergence is judged from the returned error estimates below
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for fn, breaks in pieces:
            for a, b in zip(breaks[:-1], breaks[1:]):
                val, e = integrate.quad(fn, a, b, limit=400, epsabs=1e-16, epsrel=1e-12)
                total += val
                err += e
    total *= 2.0
    if not total > 0 or 2.0 * err > 1e-10 * total:
        raise ConvergenceError(f"contour quadrature failed: value {total}, error estimate {2 * err}")
    G_c = 2 * beta * (s.lambda1 + u) - float(np.mean(np.log(d)))
    return _log_prefactor(N, beta) + 0.5 * N * G_c + math.log(total)


def _breakpoints(T: float, omega: float, d: np.ndarray) -> np.ndarray:
    # panels: resolve the smallest distance scale near 0, then roughly one
    # oscillation of exp(i omega t) per panel out to T
    pts = {0.0, T}
    for scale in (float(d.min()), float(np.median(d))):
        for k in (1, 3, 10):
            if k * scale < T:
                pts.add(k * scale)
    n_osc = int(min(200, omega * T / (4 * math.pi)))
    pts.update(np.linspace(0.0, T, n_osc + 2)[1:-1].tolist())
    return np.array(sorted(pts))


def log_partition(s: Spectrum, beta: float) -> float:
    return contour_log_partition(s, beta)


def steepest_descent_logZ(s: Spectrum, beta: float, cp: CriticalPoint | None = None) -> float:
    """Saddle-point free energy ``F_sd`` (already divided by ``N``).

    ``Z ~ C_N i Delta e^{N G(gamma)/2} I(F''(gamma) Delta^2) / sqrt(N)``, with
    ``F''(gamma) = (1/N) sum_{i>=2} (gamma - lambda_i)^{-2}``.
    """
    N = s.N
    if N < 2:
        raise ValueError("the saddle-point formula needs N >= 2 (F'' has no bulk terms)")
    cp = critical_point(s, beta) if cp is None else cp
    gaps = s.lambda1 - s.values
    G_gamma = 2 * beta * cp.gamma - float(np.mean(np.log(cp.offset + gaps)))
    logZ = (_log_prefactor(N, beta) + 0.5 * N * G_gamma + math.log(cp.offset)
            + math.log(I_alpha(cp.sd_argument)))
    return logZ / N


@dataclass(frozen=True)
class ExpansionTerms:
    tildeF: float
    partial_ls_g: float  # -(1/2N) sum_{i>=2} log(J + 1/J - lambda_i)
    Q_chi: float  # Q(chi_N) / N

    @property
    def total(self) -> float:
        return self.tildeF + self.partial_ls_g + self.Q_chi


def transitional_free_energy(s: Spectrum, p: TransitionParams) -> ExpansionTerms:
    """Eigenvalue expansion of ``F_N`` in the critical window.

    ``F_N ~ tildeF_N - (1/2N) sum_{i>=2} g(lambda_i) + Q(chi_N)/N`` with
    ``g(z) = log(J + 1/J - z)`` and ``beta`` taken from ``p`` at this ``N``.
    """
    N = s.N
    if abs(s.J - p.J) > 1e-12 and not math.isnan(s.J):
        raise ValueError(f"spectrum J={s.J} does not match transition J={p.J}")
    Jh = hat_J(p.J)
    bulk = s.bulk
    if bulk.size and bulk.max() >= Jh:
        raise RigidityViolation(f"lambda_2 = {bulk.max()} >= J + 1/J = {Jh}")
    beta = p.beta(N)
    chi = math.sqrt(N) * (s.lambda1 - Jh)
    return ExpansionTerms(
        tildeF=tilde_F_transitional(N, beta, p.J),
        partial_ls_g=-float(np.sum(np.log(Jh - bulk))) / (2 * N),
        Q_chi=float(Q_of_x(chi, p)) / N,
    )


@dataclass(frozen=True)
class FreeEnergyBreakdown:
    N: int
    beta: float
    logZ_exact: float
    F_exact: float
    F_transitional: float
    F_sd: float
    terms: ExpansionTerms

    def to_dict(self) -> dict:
        out = asdict(self)
        out["terms"] = asdict(self.terms)
        return out


def free_energy_breakdown(s: Spectrum, p: TransitionParams) -> FreeEnergyBreakdown:
    beta = p.beta(s.N)
    cp = critical_point(s, beta)
    logZ = contour_log_partition(s, beta)
    terms = transitional_free_energy(s, p)
    return FreeEnergyBreakdown(s.N, beta, logZ, logZ / s.N, terms.total,
                               steepest_descent_logZ(s, beta, cp), terms)


def regime_fluctuation_part(s: Spectrum, beta: float, J: float) -> float:
    """Leading random part of ``F_N`` away from the transition.

    Ordered phases (``max(J, 1) > 1/(2 beta)``):
    ``(beta - 1/(2 Jt)) (lambda_1 - Jt - 1/Jt)`` with ``Jt = max(J, 1)``;
    paramagnetic: ``-(1/2N) sum_i log(2 beta + 1/(2 beta) - lambda_i)``.
    """
    regime = classify_regime(beta, J)
    if regime is Regime.PARAMAGNETIC:
        z = 2 * beta + 1 / (2 * beta)
        if s.lambda1 >= z:
            raise ValueError(f"lambda_1 = {s.lambda1} >= 2 beta + 1/(2 beta) = {z}")
        return -float(np.sum(np.log(z - s.values))) / (2 * s.N)
    Jt = max(J, 1.0)
    return (beta - 1 / (2 * Jt)) * (s.lambda1 - Jt - 1 / Jt)


# ---------------------------------------------------------------- direct sphere oracles

def sphere_log_partition(M: np.ndarray, beta: float, tol: float = 1e-13) -> float:
    """``log`` of the normalized sphere average of ``exp(beta s^T M s)``, ``N <= 3``.

    N=1: the sphere is ``{-1, +1}``.  N=2: periodic trapezoid on the circle.
    N=3: Gauss-Legendre in ``cos(theta)`` times trapezoid in ``phi``.  Node
    counts double until the log changes by less than ``tol``.
    """
    M = np.asarray(M, dtype=float)
    N = M.shape[0]
    if N == 1:
        return beta * float(M[0, 0])
    if N not in (2, 3):
        raise ValueError("sphere quadrature covers N in {1, 2, 3}; use the Monte Carlo oracle")
    prev = None
    n = 32
    while n <= 4096:
        cur = _sphere_rule(M, beta, n)
        if prev is not None and abs(cur - prev) < tol:
            return cur
        prev, n = cur, 2 * n
    raise ConvergenceError("sphere quadrature did not converge")


def _sphere_rule(M: np.ndarray, beta: float, n: int) -> float:
    N = M.shape[0]
    phi = 2 * np.pi * np.arange(n) / n
    if N == 2:
        sig = math.sqrt(2) * np.stack([np.cos(phi), np.sin(phi)])
        expo = beta * np.einsum("ik,ij,jk->k", sig, M, sig)
        return float(logsumexp(expo) - math.log(n))
    u, w = np.polynomial.legendre.leggauss(n)
    r = np.sqrt(1 - u * u)
    sig = math.sqrt(3) * np.stack([
        np.outer(r, np.cos(phi)), np.outer(r, np.sin(phi)), np.outer(u, np.ones(n))])
    expo = beta * np.einsum("iab,ij,jab->ab", sig, M, sig)
    # measure: (1/4pi) du dphi, weights w/2 in u and 1/n in phi
    return float(logsumexp(expo, b=np.outer(w / 2, np.full(n, 1.0 / n))))


def sphere_log_partition_mc(M: np.ndarray, beta: float, n: int = 10 ** 6, seed: int = 0,
                            chunk: int = 2 ** 17) -> tuple[float, float]:
    """Monte Carlo ``log Z`` with uniform sphere points; returns ``(logZ, stderr)``.

    The standard error is the delta-method error of the log of the sample mean.
    """
    M = np.asarray(M, dtype=float)
    N = M.shape[0]
    if not 1 <= N <= 12:
        raise ValueError("the Monte Carlo sphere oracle is meant for N <= 12")
    rng = np.random.Generator(np.random.Philox(key=[seed, 3]))
    expo = np.empty(n)
    done = 0
    while done < n:
        m = min(chunk, n - done)
        x = rng.standard_normal((m, N))
        x *= math.sqrt(N) / np.linalg.norm(x, axis=1, keepdims=True)
        expo[done:done + m] = beta * np.einsum("ki,ij,kj->k", x, M, x)
        done += m
    top = expo.max()
    w = np.exp(expo - top)
    mean = w.mean()
    se = w.std(ddof=1) / (mean * math.sqrt(n))
    return float(top + math.log(mean)), float(se)


def direct_partition_smallN(M: np.ndarray, beta: float, method: str = "quadrature",
                            n: int = 10 ** 6, seed: int = 0) -> float:
    """Direct sphere-average ``log Z``: ``"quadrature"`` (N <= 3) or ``"monte_carlo"`` (N <= 12)."""
    if method == "quadrature":
        return sphere_log_partition(M, beta)
    if method == "monte_carlo":
        return sphere_log_partition_mc(M, beta, n=n, seed=seed)[0]
    raise ValueError(f"unknown method {method!r}")
