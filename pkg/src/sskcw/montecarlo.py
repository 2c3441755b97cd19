"""Reproducible disorder experiments and their comparison with the limit laws.

Every trial is a pure function of ``(plan, trial index)``: the per-trial seed
comes from ``SeedSequence(master_seed, spawn_key=(index,))``, so records do
not depend on how trials are distributed over worker processes.
"""

from __future__ import annotations

import functools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import special, stats

from .analytics import (BivariateGaussianLaw, CltParams, TransitionParams, limit_law_moments,
                        sample_transition_limit, tau_ell, phi_by_name, transitional_centering)
from .ensembles import EnsembleConfig, assemble_deformed, sample_wigner
from .errors import ConvergenceError, RigidityViolation
from .partition import contour_log_partition, critical_point, steepest_descent_logZ, \
    transitional_free_energy
from .spectral import (Spectrum, chi_N, classical_locations, eigenvalues, full_linear_statistic,
                       hat_J, partial_linear_statistic, rigidity_report)

SCALAR_OBSERVABLES = ("chi", "F_exact", "F_transitional", "F_sd", "rigidity")


def _parse_observable(name: str) -> tuple[str, str | None]:
    if name in SCALAR_OBSERVABLES:
        return name, None
    head, sep, tag = name.partition(":")
    if sep and head in ("partial_ls", "full_ls") and tag:
        try:
            phi_by_name(tag, 2.0)
        except KeyError as exc:
            raise ValueError(str(exc)) from None
        return head, tag
    raise ValueError(f"unknown observable {name!r}: use one of {SCALAR_OBSERVABLES} "
                     "or partial_ls:<tag> / full_ls:<tag>")


@dataclass(frozen=True)
class ExperimentPlan:
    """A batch of independent disorder trials.

    ``observables`` holds names from ``SCALAR_OBSERVABLES`` plus
    ``partial_ls:<tag>``/``full_ls:<tag>`` for the named test functions.
    ``ensemble.seed`` is ignored; trial seeds derive from ``master_seed``.
    """

    ensemble: EnsembleConfig
    transition: TransitionParams
    trials: int
    observables: tuple[str, ...] = ("chi", "partial_ls:g", "F_exact", "F_transitional", "rigidity")
    master_seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        if not 0 <= self.master_seed < 2 ** 64:
            raise ValueError("master_seed must be an unsigned 64-bit integer")
        if abs(self.ensemble.J - self.transition.J) > 1e-12:
            raise ValueError("ensemble and transition disagree on J")
        obs = tuple(sorted(set(self.observables)))
        for name in obs:
            _parse_observable(name)
        object.__setattr__(self, "observables", obs)

    def tags(self, kind: str) -> list[str]:
        return [t for k, t in map(_parse_observable, self.observables) if k == kind]

    def to_dict(self) -> dict:
        return {"ensemble": self.ensemble.to_dict(), "transition": asdict(self.transition),
                "trials": self.trials, "observables": list(self.observables),
                "master_seed": self.master_seed, "workers": self.workers}


@dataclass
class TrialRecord:
    index: int
    seed: int
    lambda1: float = math.nan
    lambda2: float = math.nan
    chi: float = math.nan
    partial_ls: dict[str, float] = field(default_factory=dict)
    full_ls: dict[str, float] = field(default_factory=dict)
    F_exact: float = math.nan
    F_transitional: float = math.nan
    F_sd: float = math.nan
    rigidity_violation: bool = False
    excluded: bool = False  # lambda_2 >= J + 1/J, outside the expansion's event
    trace_ok: bool = True
    error: str = ""

    def value(self, name: str) -> float:
        kind, tag = _parse_observable(name)
        if tag is not None:
            return getattr(self, kind).get(tag, math.nan)
        if kind == "rigidity":
            return float(self.rigidity_violation)
        return getattr(self, kind)


def trial_seed(master_seed: int, index: int) -> int:
    """64-bit seed of trial ``index``; a pure function of its arguments."""
    ss = np.random.SeedSequence(master_seed, spawn_key=(index,))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@functools.lru_cache(maxsize=8)
def _gammas(N: int) -> np.ndarray:
    return classical_locations(N)


def run_trial(plan: ExperimentPlan, index: int) -> TrialRecord:
    """One pipeline pass: sample, diagonalize, evaluate the requested observables."""
    seed = trial_seed(plan.master_seed, index)
    rec = TrialRecord(index=index, seed=seed)
    try:
        cfg = plan.ensemble.with_seed(seed)
        M = assemble_deformed(sample_wigner(cfg))
        s = eigenvalues(M, cfg.J, seed)
        _fill(rec, plan, M, s)
    except (ConvergenceError, ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        rec.error = f"{type(exc).__name__}: {exc}"
    return rec


def _fill(rec: TrialRecord, plan: ExperimentPlan, M: np.ndarray, s: Spectrum) -> None:
    J = plan.transition.J
    N = s.N
    rec.lambda1 = s.lambda1
    rec.lambda2 = float(s.values[1]) if N > 1 else math.nan
    rec.chi = chi_N(s)
    rec.excluded = bool(N > 1 and rec.lambda2 >= hat_J(J))
    # eigenvalue power sums against trace and Frobenius norm: cheap solver checks
    rec.trace_ok = bool(abs(float(np.sum(s.values)) - float(np.trace(M))) <= 1e-8 * N
                        and abs(float(s.values @ s.values) - float(np.sum(M * M))) <= 1e-6 * N)
    if "rigidity" in plan.observables:
        rec.rigidity_violation = bool(rigidity_report(s, gammas=_gammas(N)).violation)
    for tag in plan.tags("partial_ls"):
        rec.partial_ls[tag] = _safe_stat(partial_linear_statistic, s, phi_by_name(tag, J))
    for tag in plan.tags("full_ls"):
        rec.full_ls[tag] = _safe_stat(full_linear_statistic, s, phi_by_name(tag, J))
    beta = plan.transition.beta(N)
    if "F_exact" in plan.observables:
        rec.F_exact = float(contour_log_partition(s, beta)) / N
    if "F_sd" in plan.observables and N > 1:
        rec.F_sd = float(steepest_descent_logZ(s, beta, critical_point(s, beta)))
    if "F_transitional" in plan.observables and not rec.excluded:
        try:
            rec.F_transitional = float(transitional_free_energy(s, plan.transition).total)
        except RigidityViolation:
            rec.excluded = True


def _safe_stat(fn, s: Spectrum, phi) -> float:
    with np.errstate(invalid="ignore", divide="ignore"):
        v = fn(s, phi)
    return v if math.isfinite(v) else math.nan


def _run_chunk(plan: ExperimentPlan, indices: list[int]) -> list[TrialRecord]:
    return [run_trial(plan, i) for i in indices]


def run_experiment(plan: ExperimentPlan, workers: int | None = None) -> list[TrialRecord]:
    """Run all trials, in order of index; ``workers`` overrides ``plan.workers``."""
    workers = plan.workers if workers is None else workers
    indices = list(range(plan.trials))
    if workers <= 1 or plan.trials == 1:
        return _run_chunk(plan, indices)
    n_chunks = min(plan.trials, 4 * workers)
    chunks = [indices[k::n_chunks] for k in range(n_chunks)]
    out: list[TrialRecord | None] = [None] * plan.trials
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for chunk in pool.map(_run_chunk, [plan] * n_chunks, chunks):
            for rec in chunk:
                out[rec.index] = rec
    return out  # type: ignore[return-value]


# ---------------------------------------------------------------- summaries

@dataclass(frozen=True)
class CheckResult:
    name: str
    value: float
    target: float
    tolerance: str
    passed: bool
    hard: bool = False


@dataclass
class SummaryStats:
    observables: list[str]
    n: int
    mean: dict[str, float]
    variance: dict[str, float]
    se: dict[str, float]
    covariance: list[list[float]]
    ks: dict[str, dict[str, float]] = field(default_factory=dict)
    excluded: int = 0
    excluded_seeds: list[int] = field(default_factory=list)
    failed_seeds: list[int] = field(default_factory=list)
    checks: list[CheckResult] = field(default_factory=list)

    @property
    def hard_ok(self) -> bool:
        return all(c.passed for c in self.checks if c.hard)

    def check(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SummaryStats":
        d = dict(d)
        d["checks"] = [CheckResult(**c) for c in d.get("checks", [])]
        return cls(**d)


def usable(records: list[TrialRecord], names: list[str]) -> tuple[np.ndarray, list[TrialRecord]]:
    """Rows of the requested observables from non-excluded, error-free trials."""
    keep = [r for r in records if not r.excluded and not r.error
            and all(math.isfinite(r.value(n)) for n in names)]
    data = np.array([[r.value(n) for n in names] for r in keep], dtype=float).reshape(len(keep), len(names))
    return data, keep


def summarize(records: list[TrialRecord], names: list[str]) -> SummaryStats:
    """Means, variances, standard errors and covariance over usable trials."""
    data, keep = usable(records, names)
    n = data.shape[0]
    if n < 2:
        raise ValueError(f"need at least 2 usable trials, have {n}")
    mean = data.mean(axis=0)
    cov = np.atleast_2d(np.cov(data, rowvar=False))
    cov = 0.5 * (cov + cov.T)
    var = np.diag(cov)
    stats_ = SummaryStats(
        observables=list(names), n=n,
        mean=dict(zip(names, map(float, mean))),
        variance=dict(zip(names, map(float, var))),
        se=dict(zip(names, map(float, np.sqrt(var / n)))),
        covariance=cov.tolist(),
        excluded=sum(r.excluded for r in records),
        excluded_seeds=[r.seed for r in records if r.excluded],
        failed_seeds=[r.seed for r in records if r.error],
    )
    stats_.checks.append(CheckResult("variance_nonnegative", float(var.min()), 0.0, ">= 0",
                                     bool(np.all(var >= 0)), hard=True))
    stats_.checks.append(CheckResult("trace_consistent", float(sum(not r.trace_ok for r in records)),
                                     0.0, "== 0", all(r.trace_ok for r in records), hard=True))
    return stats_


def _require(records, minimum: int, what: str) -> None:
    if len(records) < minimum:
        raise ValueError(f"{what} needs at least {minimum} records, got {len(records)}")


def check_partial_ls_clt(records: list[TrialRecord], tag: str, params: CltParams,
                         z_max: float = 4.0, var_rtol: float = 0.2) -> SummaryStats:
    """Empirical law of the partial (or full) linear statistic against its Gaussian limit."""
    _require(records, 500, "check_partial_ls_clt")
    name = f"{'partial' if params.kind == 'partial' else 'full'}_ls:{tag}"
    st = summarize(records, [name])
    m, v, se = st.mean[name], st.variance[name], st.se[name]
    z = (m - params.mean) / se
    st.checks.append(CheckResult("mean_z", z, params.mean, f"|z| <= {z_max}", abs(z) <= z_max))
    rel = v / params.variance - 1
    st.checks.append(CheckResult("variance_rel", rel, params.variance, f"|rel| <= {var_rtol}",
                                 abs(rel) <= var_rtol))
    data, _ = usable(records, [name])
    ks = stats.kstest(data[:, 0], "norm", args=(params.mean, math.sqrt(params.variance)))
    st.ks[name] = {"D": float(ks.statistic), "p": float(ks.pvalue)}
    return st


def jackknife_covariance(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Sample covariance and its leave-one-out jackknife standard error."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    n = x.size
    if n < 3:
        raise ValueError("jackknife needs at least 3 points")
    sx, sy, sxy = x.sum(), y.sum(), float(x @ y)
    full = (sxy - sx * sy / n) / (n - 1)
    loo = (sxy - x * y - (sx - x) * (sy - y) / (n - 1)) / (n - 2)
    se = math.sqrt((n - 1) / n * float(np.sum((loo - loo.mean()) ** 2)))
    return float(full), se


def check_joint_covariance(records: list[TrialRecord], tag: str, J: float, W3: float,
                           z_max: float = 4.0, cov_rtol: float = 0.3) -> SummaryStats:
    """``Cov(partial statistic, chi_N)`` against ``2 W3 tau_2(phi) (1 - J^-2)``."""
    _require(records, 1000, "check_joint_covariance")
    name = f"partial_ls:{tag}"
    st = summarize(records, [name, "chi"])
    data, _ = usable(records, [name, "chi"])
    cov, se = jackknife_covariance(data[:, 0], data[:, 1])
    target = 2 * W3 * tau_ell(phi_by_name(tag, J), 2) * (1 - J ** -2)
    z = (cov - target) / se
    st.checks.append(CheckResult("cov_z", z, target, f"|z| <= {z_max}", abs(z) <= z_max))
    if target != 0:
        rel = cov / target - 1
        st.checks.append(CheckResult("cov_rel", rel, target, f"|rel| <= {cov_rtol}", abs(rel) <= cov_rtol))
        st.checks.append(CheckResult("cov_sign_z", cov / se * math.copysign(1, target), 0.0,
                                     f"> {z_max}", cov / se * math.copysign(1, target) > z_max))
    chi_target = W3 * (J ** -2 - J ** -4)
    zc = (st.mean["chi"] - chi_target) / st.se["chi"]
    st.checks.append(CheckResult("chi_mean_z", zc, chi_target, f"|z| <= {z_max}", abs(zc) <= z_max))
    # symmetric under swapping the two observables
    swapped, _ = jackknife_covariance(data[:, 1], data[:, 0])
    st.checks.append(CheckResult("cov_symmetric", abs(swapped - cov), 0.0, "<= 1e-12 |cov|",
                                 abs(swapped - cov) <= 1e-12 * max(1.0, abs(cov)), hard=True))
    st.mean["cov"] = cov
    st.se["cov"] = se
    return st


def transition_statistic(records: list[TrialRecord], p: TransitionParams, N: int) -> np.ndarray:
    """``N (F_exact - centering)`` over usable trials."""
    data, _ = usable(records, ["F_exact"])
    return N * (data[:, 0] - transitional_centering(N, p))


def check_transition_law(records: list[TrialRecord], p: TransitionParams, law: BivariateGaussianLaw,
                         N: int, n_ref: int = 10 ** 5, seed: int = 0, ks_max: float = 0.08,
                         z_max: float = 4.0, var_rtol: float = 0.25, mean_rtol: float = 0.25) -> SummaryStats:
    """Centered free energies against samples of ``G1 + Q(G2)``."""
    _require(records, 1000, "check_transition_law")
    st = summarize(records, ["F_exact"])
    x = transition_statistic(records, p, N)
    ref = sample_transition_limit(p, law, n_ref, seed)
    D, pval = ks_two_sample(x, ref)
    st.ks["transition"] = {"D": D, "p": pval}
    st.checks.append(CheckResult("ks_D", D, 0.0, f"<= {ks_max}", D <= ks_max))
    m_lim, v_lim = limit_law_moments(p, law)
    m, v = float(x.mean()), float(x.var(ddof=1))
    se = math.sqrt(v / x.size)
    st.mean["transition"] = m
    st.variance["transition"] = v
    st.se["transition"] = se
    z = (m - m_lim) / se
    st.checks.append(CheckResult("mean_z", z, m_lim, f"|z| <= {z_max}", abs(z) <= z_max))
    st.checks.append(CheckResult("mean_rel", m / m_lim - 1, m_lim, f"|rel| <= {mean_rtol}",
                                 abs(m / m_lim - 1) <= mean_rtol))
    st.checks.append(CheckResult("variance_rel", v / v_lim - 1, v_lim, f"|rel| <= {var_rtol}",
                                 abs(v / v_lim - 1) <= var_rtol))
    return st


def ks_two_sample(a, b) -> tuple[float, float]:
    """Two-sample Kolmogorov-Smirnov distance and asymptotic p-value.

    The p-value is the Kolmogorov tail ``2 sum (-1)^(k-1) exp(-2 k^2 t^2)`` at
    ``t = (sqrt(ne) + 0.12 + 0.11 / sqrt(ne)) D`` with ``ne = nm / (n + m)``.
    """
    a = np.sort(np.asarray(a, dtype=float).ravel())
    b = np.sort(np.asarray(b, dtype=float).ravel())
    if a.size == 0 or b.size == 0:
        raise ValueError("both samples must be nonempty")
    grid = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, grid, side="right") / a.size
    cdf_b = np.searchsorted(b, grid, side="right") / b.size
    D = float(np.max(np.abs(cdf_a - cdf_b)))
    en = math.sqrt(a.size * b.size / (a.size + b.size))
    p = float(special.kolmogorov((en + 0.12 + 0.11 / en) * D))
    return D, min(max(p, 0.0), 1.0)
