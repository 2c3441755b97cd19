"""Batch command-line front end.

Subcommands: ``predict``, ``experiment``, ``density``, ``phase`` and ``oracle``.
Parameters resolve as built-in defaults < ``--config`` INI section named after
the subcommand < environment (``SSKCW_<SUBCOMMAND>_<KEY>`` then ``SSKCW_<KEY>``)
< command-line flags.  Every run writes ``manifest.json`` with the resolved
configuration next to its outputs.

Exit codes: 0 success, 1 a hard invariant failed, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import configparser
import math
import os
import platform
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy
from scipy import signal, stats

from . import __version__
from . import io as sio
from .analytics import (Q_of_x, TEST_FUNCTIONS, TransitionParams, classify_regime, clt_params,
                        limit_law_moments, limiting_free_energy, s_of_x, tau_ell, phi_by_name,
                        transition_law)
from .errors import ConvergenceError
from .ensembles import EnsembleConfig, EntryDistribution, EntryKind, make_two_point
from .montecarlo import (ExperimentPlan, check_joint_covariance, check_partial_ls_clt,
                         check_transition_law, run_experiment, summarize, usable)
from .partition import contour_log_partition, sphere_log_partition, sphere_log_partition_mc
from .spectral import eigenvalues

ENV_PREFIX = "SSKCW_"
EXIT_OK, EXIT_HARD_FAILURE, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _floats(text: str) -> list[float]:
    return [float(t) for t in str(text).replace(";", ",").split(",") if t.strip()]


def _ints(text: str) -> list[int]:
    return [int(t) for t in str(text).replace(";", ",").split(",") if t.strip()]


def _strs(text: str) -> list[str]:
    return [t.strip() for t in str(text).replace(";", ",").split(",") if t.strip()]


_CONVERT = {"float": float, "int": int, "str": str, "floats": _floats, "ints": _ints, "strs": _strs}

# subcommand -> (key, type, default, help)
PARAMS: dict[str, list[tuple[str, str, object, str]]] = {
    "predict": [
        ("J", "float", 2.0, "spike strength, > 1"),
        ("B", "float", 0.0, "critical-window offset"),
        ("w2", "float", 2.0, "second moment of diagonal entries"),
        ("W3", "float", 0.0, "third moment of off-diagonal entries"),
        ("W4", "float", 3.0, "fourth moment of off-diagonal entries"),
        ("phi", "strs", list(TEST_FUNCTIONS), "named test functions"),
        ("x", "floats", [-1.0, 0.0, 1.0], "points at which Q is tabulated"),
    ],
    "experiment": [
        ("N", "int", 400, "matrix size"),
        ("J", "float", 2.0, "spike strength"),
        ("B", "float", 0.0, "critical-window offset"),
        ("dist", "str", "gaussian", "entry law: gaussian, rademacher or two_point"),
        ("W3", "float", 0.0, "target third moment for two_point"),
        ("w2", "float", 2.0, "diagonal second moment"),
        ("trials", "int", 100, "number of disorder samples"),
        ("phi", "str", "g", "test function for the linear-statistic checks"),
        ("observables", "strs", ["chi", "partial_ls:g", "F_exact", "F_transitional", "F_sd", "rigidity"],
         "observables to record"),
        ("checks", "strs", ["clt", "cov", "transition"], "statistical checks run when enough trials exist"),
        ("n_ref", "int", 100000, "limit-law reference samples"),
    ],
    "density": [
        ("J", "float", 2.0, "spike strength"),
        ("B", "floats", [-1.0, 0.0, 1.0], "window offsets, one curve each"),
        ("n", "int", 100000, "samples per curve, >= 1e4"),
        ("points", "int", 1024, "grid points per curve"),
    ],
    "phase": [
        ("J_min", "float", 0.05, ""), ("J_max", "float", 3.0, ""), ("J_n", "int", 60, ""),
        ("T_min", "float", 0.05, "smallest 1/(2 beta)"), ("T_max", "float", 3.0, ""),
        ("T_n", "int", 60, ""),
    ],
    "oracle": [
        ("sizes", "ints", [1, 2, 3], "sizes checked against direct quadrature"),
        ("mc_sizes", "ints", [6, 10], "sizes checked against sphere Monte Carlo"),
        ("count", "int", 20, "random matrices per size"),
        ("mc_count", "int", 2, "random matrices per Monte Carlo size"),
        ("mc_points", "int", 1000000, "Monte Carlo points"),
        ("beta_min", "float", 0.1, ""), ("beta_max", "float", 1.0, ""),
    ],
}
COMMON = [("seed", "int", 0, "master seed (unsigned 64-bit)"),
          ("workers", "int", 1, "worker processes"),
          ("out", "str", "out", "output directory"),
          ("format", "str", "csv", "table format: csv or json")]


@dataclass
class RunConfig:
    command: str
    values: dict[str, object]
    sources: dict[str, str] = field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]

    @property
    def out(self) -> Path:
        return Path(str(self.values["out"]))


def _convert(kind: str, raw, where: str):
    if not isinstance(raw, str):
        return raw
    try:
        return _CONVERT[kind](raw)
    except ValueError as exc:
        raise UsageError(f"{where}: cannot read {raw!r} as {kind} ({exc})") from None


def resolve_config(command: str, flags: dict, environ=None) -> RunConfig:
    """Merge defaults, config file, environment and flags (in increasing priority)."""
    environ = os.environ if environ is None else environ
    params = COMMON + PARAMS[command]
    values = {k: d for k, _, d, _ in params}
    sources = {k: "default" for k in values}
    kinds = {k: t for k, t, _, _ in params}
    path = flags.get("config") or environ.get(ENV_PREFIX + "CONFIG")
    if path:
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str  # keys are case sensitive (J vs j)
        try:
            with open(path) as fh:
                parser.read_file(fh)
        except (OSError, configparser.Error) as exc:
            raise UsageError(f"config {path}: {exc}") from None
        for section in ("common", command):
            if not parser.has_section(section):
                continue
            for key, raw in parser.items(section):
                if key not in kinds:
                    raise UsageError(f"config {path} [{section}] {key}: unknown key for {command!r}")
                values[key] = _convert(kinds[key], raw, f"config {path} [{section}] {key}")
                sources[key] = f"file:{section}"
    for key in values:
        for name in (f"{ENV_PREFIX}{command.upper()}_{key.upper()}", f"{ENV_PREFIX}{key.upper()}"):
            if name in environ:
                values[key] = _convert(kinds[key], environ[name], f"environment {name}")
                sources[key] = f"env:{name}"
                break
    for key, v in flags.items():
        if key in values and v is not None:
            values[key] = _convert(kinds[key], v, f"flag --{key}")
            sources[key] = "flag"
    if values["format"] not in ("csv", "json"):
        raise UsageError(f"format must be csv or json, got {values['format']!r}")
    if not 0 <= int(values["seed"]) < 2 ** 64:
        raise UsageError("seed must be an unsigned 64-bit integer")
    if int(values["workers"]) < 1:
        raise UsageError("workers must be at least 1")
    return RunConfig(command, values, sources)


def write_manifest(cfg: RunConfig, outputs: list[str], extra: dict | None = None) -> Path:
    doc = {
        "command": cfg.command,
        "config": cfg.values,
        "sources": cfg.sources,
        "outputs": sorted(outputs),
        "package_version": __version__,
        "numpy": np.__version__, "scipy": scipy.__version__, "python": platform.python_version(),
        "env_prefix": ENV_PREFIX,
        **(extra or {}),
    }
    path = cfg.out / "manifest.json"
    sio.write_json(path, doc, "manifest")
    return path


def _write_rows(cfg: RunConfig, stem: str, schema: str, columns: list[str], rows: list[list]) -> str:
    if cfg["format"] == "csv":
        name = f"{stem}.csv"
        sio.write_table(cfg.out / name, schema, columns, rows)
    else:
        name = f"{stem}.json"
        sio.write_json(cfg.out / name, {"rows": [dict(zip(columns, r)) for r in rows]}, schema)
    return name


# ---------------------------------------------------------------- predict

def predictions(J: float, B: float = 0.0, w2: float = 2.0, W3: float = 0.0, W4: float = 3.0,
                phi: list[str] | None = None, x: list[float] | None = None) -> dict:
    """All analytic predictions for one parameter set, as plain data."""
    if not J > 1:
        raise UsageError(f"predict needs J > 1, got {J}")
    if W4 < 1 + W3 * W3:
        raise UsageError(f"moments are inconsistent: need W4 >= 1 + W3^2, got W3={W3}, W4={W4}")
    if w2 < 0:
        raise UsageError("w2 must be nonnegative")
    p = TransitionParams(J, B)
    law = transition_law(p, w2, W3, W4)
    m, v = limit_law_moments(p, law)
    clt = {}
    for name in phi or TEST_FUNCTIONS:
        f = phi_by_name(name, J)
        t2 = tau_ell(f, 2)
        at_spike = float(f(np.array([J + 1 / J]))[0]) if name != "g" else -math.inf
        clt[name] = {
            # g is singular at the spike location, so only its partial statistic exists
            "full": clt_params(f, "full", J, w2, W3, W4).to_dict() if math.isfinite(at_spike) else None,
            "partial": clt_params(f, "partial", J, w2, W3, W4).to_dict(),
            "tau2": t2,
            "cov_with_chi": 2 * W3 * t2 * (1 - J ** -2),
        }
    xs = list(x if x is not None else [-1.0, 0.0, 1.0])
    q = [float(v_) for v_ in np.atleast_1d(Q_of_x(np.array(xs), p))]
    matching = {"x": xs, "Q": q, "s": [float(v_) for v_ in np.atleast_1d(s_of_x(np.array(xs), p))]}
    if B > 0:
        matching["Q_minus_Bx_over_2"] = [qi - B * xi / 2 for qi, xi in zip(q, xs)]
    elif B < 0:
        c = J * J - 1
        matching["Q_plus_B2c_over_4_minus_log_sqrt"] = [
            qi + B * B * c / 4 - 0.5 * math.log(4 * math.pi / abs(B)) for qi in q]
    return {"params": {"J": J, "B": B, "w2": w2, "W3": W3, "W4": W4},
            "transition_law": law.to_dict(),
            "limit_moments": {"mean": m, "variance": v},
            "clt": clt, "matching": matching}


def cmd_predict(cfg: RunConfig) -> int:
    """Analytic predictions: transition law, CLT parameters, Q and s tables."""
    doc = predictions(cfg["J"], cfg["B"], cfg["w2"], cfg["W3"], cfg["W4"], cfg["phi"], cfg["x"])
    outputs = []
    if cfg["format"] == "json":
        sio.write_json(cfg.out / "predict.json", doc, "predict")
        outputs.append("predict.json")
    else:
        rows = _flatten(doc)
        outputs.append(_write_rows(cfg, "predict", "predict", ["key", "value"], rows))
    write_manifest(cfg, outputs)
    return EXIT_OK


def _flatten(d, prefix: str = "") -> list[list]:
    rows = []
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            rows.extend(_flatten(v, key + "."))
        elif isinstance(v, list):
            rows.extend([f"{key}[{i}]", x] for i, x in enumerate(v))
        else:
            rows.append([key, v])
    return rows


# ---------------------------------------------------------------- experiment

def _distribution(name: str, W3: float, w2: float) -> EntryDistribution:
    if name in ("gaussian", "goe"):
        return EntryDistribution(EntryKind.GAUSSIAN, w2=w2)
    if name == "rademacher":
        return EntryDistribution(EntryKind.RADEMACHER, w2=w2)
    if name == "two_point":
        return make_two_point(W3, w2)
    raise UsageError(f"unknown entry distribution {name!r}")


def build_plan(cfg: RunConfig) -> ExperimentPlan:
    dist = _distribution(cfg["dist"], cfg["W3"], cfg["w2"])
    try:
        return ExperimentPlan(EnsembleConfig(cfg["N"], cfg["J"], dist), TransitionParams(cfg["J"], cfg["B"]),
                              cfg["trials"], tuple(cfg["observables"]), int(cfg["seed"]), int(cfg["workers"]))
    except ValueError as exc:
        raise UsageError(f"invalid experiment plan: {exc}") from None


def run_checks(plan: ExperimentPlan, records, checks: list[str], phi: str, n_ref: int, seed: int) -> dict:
    """Summaries for every requested check that the records can support."""
    ens, p = plan.ensemble, plan.transition
    dist = ens.dist
    names = [o for o in plan.observables if o != "rigidity"]
    out = {"base": summarize(records, names) if len(records) >= 2 else None}
    n_ok = len(usable(records, [])[1])
    if "clt" in checks and f"partial_ls:{phi}" in plan.observables and n_ok >= 500:
        params = clt_params(phi_by_name(phi, p.J), "partial", p.J, dist.w2, dist.W3, dist.W4)
        out["clt"] = check_partial_ls_clt(records, phi, params)
    if "cov" in checks and {f"partial_ls:{phi}", "chi"} <= set(plan.observables) and n_ok >= 1000:
        out["cov"] = check_joint_covariance(records, phi, p.J, dist.W3)
    if "transition" in checks and "F_exact" in plan.observables and n_ok >= 1000:
        law = transition_law(p, dist.w2, dist.W3, dist.W4)
        out["transition"] = check_transition_law(records, p, law, ens.N, n_ref=n_ref, seed=seed)
    return out


def cmd_experiment(cfg: RunConfig) -> int:
    """Monte Carlo disorder trials with the statistical checks they support."""
    plan = build_plan(cfg)
    t0 = time.time()
    records = run_experiment(plan)
    elapsed = time.time() - t0
    outputs = []
    if cfg["format"] == "csv":
        sio.write_trials(cfg.out / "trials.csv", records, {"N": plan.ensemble.N, "J": plan.ensemble.J})
        outputs.append("trials.csv")
    else:
        sio.write_json(cfg.out / "trials.json", {"records": [vars(r) for r in records]}, "trials")
        outputs.append("trials.json")
    summaries = run_checks(plan, records, cfg["checks"], cfg["phi"], cfg["n_ref"], int(cfg["seed"]))
    hard_ok = all(s.hard_ok for s in summaries.values() if s is not None)
    doc = {"plan": plan.to_dict(), "hard_ok": hard_ok,
           "failed_trials": sum(bool(r.error) for r in records),
           "summaries": {k: (s.to_dict() if s is not None else None) for k, s in summaries.items()}}
    sio.write_json(cfg.out / "summary.json", doc, "experiment-summary")
    outputs.append("summary.json")
    write_manifest(cfg, outputs, {"elapsed_seconds": elapsed})
    for name, st in summaries.items():
        for c in (st.checks if st is not None else []):
            tag = "HARD" if c.hard else "soft"
            print(f"{name:10s} {c.name:22s} {tag} {'ok  ' if c.passed else 'FAIL'} value={c.value:.6g} "
                  f"target={c.target:.6g} ({c.tolerance})")
    return EXIT_OK if hard_ok else EXIT_HARD_FAILURE


# ---------------------------------------------------------------- density

def q_samples(J: float, B: float, n: int, seed: int) -> np.ndarray:
    """``n`` draws of ``Q(G2)`` at window offset ``B``."""
    p = TransitionParams(J, B)
    law = transition_law(p)
    rng = np.random.Generator(np.random.Philox(key=[seed, 2]))
    g2 = law.mean2 + math.sqrt(law.var2) * rng.standard_normal(n)
    return np.asarray(Q_of_x(g2, p), dtype=float)


@dataclass(frozen=True)
class DensityCurve:
    B: float
    x: np.ndarray
    density: np.ndarray
    bandwidth: float
    n: int

    @property
    def integral(self) -> float:
        return float(np.trapezoid(self.density, self.x))

    def modes(self, z: float | None = 3.0) -> int:
        """Number of local maxima whose prominence exceeds ``z`` pointwise standard errors.

        The standard error of a Gaussian-kernel estimate is
        ``sqrt(f R(K) / (n h))`` with ``R(K) = 1 / (2 sqrt(pi))``; ``z=None``
        counts every local maximum.
        """
        d = self.density
        peaks, _ = signal.find_peaks(np.concatenate([[-np.inf], d, [-np.inf]]))
        peaks -= 1
        if z is None:
            return int(peaks.size)
        prom = signal.peak_prominences(d, peaks)[0]
        se = np.sqrt(d[peaks] / (2 * math.sqrt(math.pi) * self.n * self.bandwidth))
        return int(np.sum(prom > z * se))


def density_curve(q: np.ndarray, B: float, points: int = 1024) -> DensityCurve:
    """Gaussian KDE with Silverman's bandwidth on a grid covering all kernel mass."""
    kde = stats.gaussian_kde(q, bw_method="silverman")
    h = float(np.sqrt(kde.covariance[0, 0]))
    x = np.linspace(q.min() - 8 * h, q.max() + 8 * h, points)
    return DensityCurve(B, x, kde(x), h, q.size)


def normal_fit_ks(q: np.ndarray) -> float:
    """KS distance of the standardized sample from the standard normal."""
    z = (q - q.mean()) / q.std(ddof=1)
    return float(stats.kstest(z, "norm").statistic)


def cmd_density(cfg: RunConfig) -> int:
    """Density curves of Q(G2) for several window offsets."""
    n = cfg["n"]
    if n < 10 ** 4:
        raise UsageError(f"density needs n >= 10000, got {n}")
    rows, report = [], []
    for k, B in enumerate(cfg["B"]):
        q = q_samples(cfg["J"], B, n, int(cfg["seed"]) + k)
        cur = density_curve(q, B, cfg["points"])
        rows += [[B, float(a), float(b)] for a, b in zip(cur.x, cur.density)]
        report.append({"B": B, "bandwidth": cur.bandwidth, "integral": cur.integral,
                       "modes": cur.modes(), "raw_local_maxima": cur.modes(None),
                       "min_density": float(cur.density.min()), "ks_vs_fitted_normal": normal_fit_ks(q)})
    outputs = [_write_rows(cfg, "density", "density", ["B", "x", "density"], rows)]
    sio.write_json(cfg.out / "density_summary.json", {"curves": report}, "density-summary")
    outputs.append("density_summary.json")
    (cfg.out / "density.gp").write_text(_gnuplot_density(outputs[0], cfg["B"]))
    outputs.append("density.gp")
    write_manifest(cfg, outputs)
    ok = all(r["min_density"] > 0 and abs(r["integral"] - 1) <= 1e-3 for r in report)
    return EXIT_OK if ok else EXIT_HARD_FAILURE


def _gnuplot_density(table: str, Bs: list[float]) -> str:
    plots = ", ".join(f"'{table}' using ($1=={B!r} ? $2 : 1/0):3 with lines title 'B={B:g}'" for B in Bs)
    return ("set datafile separator ','\nset datafile commentschars '#'\nset key autotitle columnhead\n"
            f"set xlabel 'x'\nset ylabel 'density'\nplot {plots}\n")


# ---------------------------------------------------------------- phase

def phase_grid(J_values, T_values) -> list[list]:
    """Rows ``(J, 1/(2 beta), regime, F)`` over the product grid."""
    rows = []
    for J in J_values:
        for T in T_values:
            F, regime = limiting_free_energy(1.0 / (2 * T), J)
            rows.append([float(J), float(T), regime.value, F])
    return rows


def boundary_jumps(J_values, T_values, delta: float = 1e-13) -> dict[str, float]:
    """Largest change of the limiting free energy across each phase boundary.

    Each boundary point is compared with points ``delta`` away on both sides,
    so a jump shows up as an ``O(1)`` value and a continuous boundary as ``O(delta)``.
    """
    def across(beta, J, dbeta, dJ):
        F0 = limiting_free_energy(beta, J)[0]
        return max(abs(limiting_free_energy(beta + e * dbeta, J + e * dJ)[0] - F0) for e in (-delta, delta))

    ferro_para = spin_para = ferro_spin = 0.0
    for J in J_values:
        if J > 1:  # 2 beta J = 1
            ferro_para = max(ferro_para, across(1 / (2 * J), J, 1.0, 0.0))
        elif J < 1:  # beta = 1/2
            spin_para = max(spin_para, across(0.5, J, 1.0, 0.0))
    for T in T_values:
        if T < 1:  # J = 1 inside the low-temperature region
            ferro_spin = max(ferro_spin, across(1 / (2 * T), 1.0, 0.0, 1.0))
    return {"ferro_para": ferro_para, "spin_glass_para": spin_para, "ferro_spin_glass": ferro_spin}


def cmd_phase(cfg: RunConfig) -> int:
    """Limiting free energy and regime over a (J, 1/(2 beta)) grid."""
    if min(cfg["J_min"], cfg["T_min"]) <= 0 or cfg["J_max"] < cfg["J_min"] or cfg["T_max"] < cfg["T_min"]:
        raise UsageError("phase grid ranges must be positive and ordered")
    if min(cfg["J_n"], cfg["T_n"]) < 1:
        raise UsageError("phase grid needs at least one point per axis")
    Js = np.linspace(cfg["J_min"], cfg["J_max"], cfg["J_n"])
    Ts = np.linspace(cfg["T_min"], cfg["T_max"], cfg["T_n"])
    rows = phase_grid(Js, Ts)
    outputs = [_write_rows(cfg, "phase", "phase", ["J", "inv_2beta", "regime", "F"], rows)]
    jumps = boundary_jumps(Js, Ts)
    sio.write_json(cfg.out / "phase_summary.json", {"boundary_jumps": jumps}, "phase-summary")
    outputs.append("phase_summary.json")
    (cfg.out / "phase.gp").write_text(
        "set datafile separator ','\nset xlabel 'J'\nset ylabel '1/(2 beta)'\n"
        f"splot '{outputs[0]}' using 1:2:4 with points palette title 'F'\n")
    outputs.append("phase.gp")
    write_manifest(cfg, outputs)
    return EXIT_OK if max(jumps.values()) <= 1e-12 else EXIT_HARD_FAILURE


# ---------------------------------------------------------------- oracle

def oracle_rows(sizes, mc_sizes, count: int, mc_count: int, mc_points: int, beta_range, seed: int):
    """Contour ``log Z`` against the direct sphere oracles on random GOE-type matrices."""
    rng = np.random.Generator(np.random.Philox(key=[seed, 4]))
    rows = []
    for N, reps, method in [(N, count, "quadrature") for N in sizes] + [(N, mc_count, "monte_carlo") for N in mc_sizes]:
        for r in range(reps):
            X = rng.standard_normal((N, N))
            M = (X + X.T) / 2
            beta = float(rng.uniform(*beta_range))
            s = eigenvalues(M)
            contour = contour_log_partition(s, beta)
            if method == "quadrature":
                ref, se = sphere_log_partition(M, beta), 0.0
            else:
                ref, se = sphere_log_partition_mc(M, beta, n=mc_points, seed=seed + r)
            err = abs(contour - ref)
            if method == "quadrature":
                ok = err <= 1e-6 * max(1.0, abs(ref))
            else:
                ok = err <= 3 * se
            rows.append([N, r, method, beta, contour, ref, se, err, ok])
    return rows


ORACLE_COLUMNS = ["N", "rep", "method", "beta", "logZ_contour", "logZ_reference", "mc_se", "abs_err", "ok"]


def cmd_oracle(cfg: RunConfig) -> int:
    """Contour log Z against direct sphere quadrature and Monte Carlo."""
    rows = oracle_rows(cfg["sizes"], cfg["mc_sizes"], cfg["count"], cfg["mc_count"], cfg["mc_points"],
                       (cfg["beta_min"], cfg["beta_max"]), int(cfg["seed"]))
    outputs = [_write_rows(cfg, "oracle", "oracle", ORACLE_COLUMNS, rows)]
    write_manifest(cfg, outputs)
    hard = all(r[-1] for r in rows if r[2] == "quadrature")
    soft = all(r[-1] for r in rows if r[2] == "monte_carlo")
    print(f"quadrature oracle: {'ok' if hard else 'FAIL'}; Monte Carlo oracle (soft): {'ok' if soft else 'outside 3 SE'}")
    return EXIT_OK if hard else EXIT_HARD_FAILURE


COMMANDS = {"predict": cmd_predict, "experiment": cmd_experiment, "density": cmd_density,
            "phase": cmd_phase, "oracle": cmd_oracle}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sskcw", description=__doc__.split("\n")[0],
                                 formatter_class=argparse.RawDescriptionHelpFormatter,
                                 epilog=f"Environment overrides: {ENV_PREFIX}<SUBCOMMAND>_<KEY> or {ENV_PREFIX}<KEY>.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, params in PARAMS.items():
        sp = sub.add_parser(name, help=COMMANDS[name].__doc__ or name)
        sp.add_argument("--config", metavar="PATH", help="INI file; section [%s] (and [common])" % name)
        for key, kind, default, help_ in COMMON + params:
            sp.add_argument(f"--{key}", dest=key, default=None, metavar=kind.upper(),
                            help=f"{help_} (default {default})".strip())
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        cfg = resolve_config(args.command, vars(args))
        cfg.out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg)
    except ConvergenceError as exc:
        print(f"sskcw: numerical failure: {exc}", file=sys.stderr)
        return EXIT_HARD_FAILURE
    except UsageError as exc:
        print(f"sskcw: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
