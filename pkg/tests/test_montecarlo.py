import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from sskcw.analytics import TransitionParams, clt_params, phi_by_name, transition_law
from sskcw.ensembles import EnsembleConfig
from sskcw.montecarlo import (ExperimentPlan, TrialRecord, check_joint_covariance, check_partial_ls_clt,
                              check_transition_law, jackknife_covariance, ks_two_sample, run_experiment,
                              run_trial, summarize, trial_seed, usable)


def plan(N=40, trials=6, workers=1, obs=("chi", "partial_ls:g", "full_ls:x2", "F_exact",
                                          "F_transitional", "F_sd", "rigidity"), seed=77):
    return ExperimentPlan(EnsembleConfig(N, 2.0), TransitionParams(2.0, 0.5), trials, obs, seed, workers)


def fake_records(values: dict[str, np.ndarray]) -> list[TrialRecord]:
    n = len(next(iter(values.values())))
    out = []
    for i in range(n):
        r = TrialRecord(index=i, seed=i)
        for name, v in values.items():
            kind, _, tag = name.partition(":")
            if tag:
                getattr(r, kind)[tag] = float(v[i])
            else:
                setattr(r, kind, float(v[i]))
        out.append(r)
    return out


@given(st.integers(0, 2 ** 64 - 1), st.integers(0, 10 ** 6))
def test_trial_seed_is_pure(master, i):
    assert trial_seed(master, i) == trial_seed(master, i)
    assert 0 <= trial_seed(master, i) < 2 ** 64


def test_trial_seeds_distinct():
    seeds = {trial_seed(5, i) for i in range(5000)}
    assert len(seeds) == 5000


def test_plan_validation():
    with pytest.raises(ValueError):
        plan(trials=0)
    with pytest.raises(ValueError):
        plan(workers=0)
    with pytest.raises(ValueError):
        ExperimentPlan(EnsembleConfig(10, 3.0), TransitionParams(2.0, 0.0), 1)
    with pytest.raises(ValueError):
        plan(obs=("bogus",))
    assert list(plan(obs=("F_exact", "chi")).observables) == sorted(["F_exact", "chi"])


def test_worker_count_does_not_change_output():
    a = run_experiment(plan(workers=1))
    b = run_experiment(plan(workers=2))
    assert [r.__dict__ for r in a] == [r.__dict__ for r in b]
    assert [r.index for r in a] == list(range(6))


def test_single_trial_and_fields():
    p = plan(trials=1)
    (r,) = run_experiment(p)
    assert r == run_trial(p, 0)
    assert not r.error and r.trace_ok
    assert r.lambda1 >= r.lambda2
    assert set(r.partial_ls) == {"g"} and set(r.full_ls) == {"x2"}
    assert abs(r.F_sd - r.F_exact) < 0.05
    assert isinstance(r.rigidity_violation, bool)
    assert r.value("rigidity") in (0.0, 1.0)


def test_summarize_basic():
    recs = fake_records({"chi": np.arange(10.0), "F_exact": np.arange(10.0) ** 2})
    recs[3].excluded = True
    recs[4].error = "boom"
    st_ = summarize(recs, ["chi", "F_exact"])
    assert st_.n == 8 and st_.excluded == 1
    assert st_.excluded_seeds == [3] and st_.failed_seeds == [4]
    keep = np.array([0, 1, 2, 5, 6, 7, 8, 9.0])
    assert st_.mean["chi"] == pytest.approx(keep.mean())
    assert st_.variance["chi"] == pytest.approx(keep.var(ddof=1))
    cov = np.array(st_.covariance)
    assert np.allclose(cov, cov.T) and st_.hard_ok
    data, kept = usable(recs, ["chi"])
    assert data.shape == (8, 1) and len(kept) == 8
    with pytest.raises(ValueError):
        summarize(recs[:1], ["chi"])


@given(st.lists(st.floats(-10, 10), min_size=3, max_size=30), st.integers(0, 1000))
def test_jackknife_matches_brute_force(xs, seed):
    x = np.array(xs)
    y = np.random.default_rng(seed).standard_normal(x.size) + 0.3 * x
    cov, se = jackknife_covariance(x, y)
    assert cov == pytest.approx(np.cov(x, y)[0, 1], abs=1e-9)
    n = x.size
    loo = np.array([np.cov(np.delete(x, i), np.delete(y, i))[0, 1] for i in range(n)])
    brute = math.sqrt((n - 1) / n * np.sum((loo - loo.mean()) ** 2))
    assert se == pytest.approx(brute, rel=1e-6, abs=1e-9)
    c2, se2 = jackknife_covariance(y, x)
    assert c2 == pytest.approx(cov, abs=1e-12) and se2 == pytest.approx(se, abs=1e-12)


def test_jackknife_too_few():
    with pytest.raises(ValueError):
        jackknife_covariance([1.0, 2.0], [1.0, 3.0])


def test_checks_require_enough_records():
    recs = fake_records({"chi": np.zeros(10), "partial_ls:g": np.zeros(10), "F_exact": np.zeros(10)})
    p = TransitionParams(2.0, 0.0)
    with pytest.raises(ValueError):
        check_partial_ls_clt(recs, "g", clt_params(phi_by_name("g", 2.0), "partial", 2.0))
    with pytest.raises(ValueError):
        check_joint_covariance(recs, "g", 2.0, 0.0)
    with pytest.raises(ValueError):
        check_transition_law(recs, p, transition_law(p), 400)


def test_clt_check_on_synthetic_gaussian():
    par = clt_params(phi_by_name("x2", 2.0), "partial", 2.0)
    rng = np.random.default_rng(0)
    x = rng.normal(par.mean, math.sqrt(par.variance), 2000)
    st_ = check_partial_ls_clt(fake_records({"partial_ls:x2": x}), "x2", par)
    assert st_.check("mean_z").passed and st_.check("variance_rel").passed
    assert st_.ks["partial_ls:x2"]["p"] > 1e-3
    # a shifted sample must fail the mean check
    st_ = check_partial_ls_clt(fake_records({"partial_ls:x2": x + 0.5}), "x2", par)
    assert not st_.check("mean_z").passed


def test_joint_covariance_on_synthetic_data():
    rng = np.random.default_rng(1)
    n = 4000
    chi = rng.standard_normal(n)
    g = rng.standard_normal(n)
    st_ = check_joint_covariance(fake_records({"partial_ls:g": g, "chi": chi}), "g", 2.0, 0.0)
    assert st_.check("cov_z").passed and st_.check("cov_symmetric").passed
    assert st_.check("chi_mean_z").passed
    assert "cov_rel" not in [c.name for c in st_.checks]


def test_ks_matches_scipy():
    rng = np.random.default_rng(2)
    a, b = rng.standard_normal(700), rng.standard_normal(900) + 0.1
    D, p = ks_two_sample(a, b)
    ref = stats.ks_2samp(a, b, method="asymp")
    assert D == pytest.approx(ref.statistic, abs=1e-15)
    assert p == pytest.approx(ref.pvalue, abs=0.02)


def test_ks_edge_cases():
    assert ks_two_sample([1.0, 2.0], [1.0, 2.0])[0] == 0.0
    D, p = ks_two_sample([0.0, 0.1], [5.0, 6.0])
    assert D == 1.0 and p < 0.5
    with pytest.raises(ValueError):
        ks_two_sample([], [1.0])


def test_ks_pvalue_calibrated():
    rng = np.random.default_rng(3)
    ps = [ks_two_sample(rng.standard_normal(10 ** 4), rng.standard_normal(10 ** 4))[1] for _ in range(100)]
    assert 0.4 <= np.median(ps) <= 0.6


def test_unknown_tag_rejected_at_plan_time():
    with pytest.raises(ValueError):
        plan(obs=("partial_ls:nope",))
