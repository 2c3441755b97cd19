import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.special import ive

from sskcw.analytics import TransitionParams, s_minus_x, s_of_x
from sskcw.ensembles import EnsembleConfig, assemble_deformed, sample_wigner
from sskcw.errors import RigidityViolation
from sskcw.partition import (G_and_derivatives, contour_log_partition, critical_point,
                             direct_partition_smallN, free_energy_breakdown, regime_fluctuation_part,
                             sphere_log_partition, sphere_log_partition_mc, steepest_descent_logZ,
                             transitional_free_energy)
from sskcw.spectral import Spectrum, chi_N, eigenvalues


def goe_spectrum(N, seed, J=2.0):
    M = assemble_deformed(sample_wigner(EnsembleConfig(N, J, seed=seed)))
    return eigenvalues(M, J, seed)


def sym(seed, N):
    X = np.random.default_rng(seed).standard_normal((N, N))
    return (X + X.T) / 2


def test_G_n1():
    s = Spectrum(np.array([0.4]), 2.0)
    G, G1, G2, G3 = G_and_derivatives(s, 0.3, 1.4)
    assert G == pytest.approx(0.6 * 1.4 - math.log(1.0))
    assert G1 == pytest.approx(0.6 - 1.0)
    assert G2 == pytest.approx(1.0) and G3 == pytest.approx(-2.0)


@pytest.mark.parametrize("z", [2.7, 3.5 + 0.0j, 1.0 + 0.8j])
def test_G_derivatives_finite_differences(z):
    s = Spectrum(np.array([2.2, 0.3, -1.1]), 2.0)
    beta = 0.37
    h = 1e-4
    vals = G_and_derivatives(s, beta, z)
    for k in range(3):
        fp = G_and_derivatives(s, beta, z + h, k)[k]
        fm = G_and_derivatives(s, beta, z - h, k)[k]
        assert (fp - fm) / (2 * h) == pytest.approx(vals[k + 1], rel=1e-7, abs=1e-9)


def test_G_rejects_real_z_below_top():
    with pytest.raises(ValueError):
        G_and_derivatives(Spectrum(np.array([1.0, 0.0]), 2.0), 0.3, 0.5)


def test_critical_point_examples():
    cp = critical_point(Spectrum(np.array([0.7]), 2.0), 0.3)
    assert cp.gamma == pytest.approx(0.7 + 1 / 0.6, abs=1e-12)
    cp = critical_point(Spectrum(np.array([2.0, 0.0]), 2.0), 0.25)
    assert cp.gamma == pytest.approx(2 + math.sqrt(2), abs=1e-12)


@given(st.integers(1, 200), st.integers(0, 10 ** 5), st.floats(0.05, 3.0))
def test_critical_point_residual(N, seed, beta):
    s = goe_spectrum(N, seed)
    cp = critical_point(s, beta)
    assert cp.gamma > s.lambda1 and cp.Delta > 0
    assert abs(G_and_derivatives(s, beta, cp.gamma, 1)[1]) <= 1e-10
    assert cp.residual <= 1e-10


def test_critical_point_window_asymptotics():
    # sqrt(N)(gamma - lambda_1) tracks s(chi) - chi and s_N tracks s(chi)
    N, tol = 400, 400 ** (-0.5 + 0.3)
    p = TransitionParams(2.0, 0.0)
    ok_delta = ok_s = 0
    for seed in range(200):
        s = goe_spectrum(N, seed)
        cp = critical_point(s, p.beta(N))
        chi = chi_N(s)
        ok_delta += abs(cp.Delta - float(s_minus_x(chi, p))) <= tol
        ok_s += abs(cp.s_N - float(s_of_x(chi, p))) <= tol
        assert 0 < cp.sd_argument < np.inf
    assert ok_delta >= 190 and ok_s >= 190


def test_contour_n1():
    assert contour_log_partition(Spectrum(np.array([0.7]), 2.0), 0.3) == pytest.approx(0.21, abs=1e-12)


def test_contour_n2_bessel_identity():
    for seed in range(10):
        M = sym(seed, 2)
        beta = 0.3 + 0.1 * seed
        a, b = np.linalg.eigvalsh(M)[::-1]
        x = beta * (a - b)
        exact = beta * (a + b) + math.log(ive(0, x)) + x
        assert contour_log_partition(eigenvalues(M), beta) == pytest.approx(exact, abs=1e-12)
        assert sphere_log_partition(M, beta) == pytest.approx(exact, abs=1e-12)
    # diag(1, -1), beta = 1/2: log I0(1)
    assert direct_partition_smallN(np.diag([1.0, -1.0]), 0.5) == pytest.approx(math.log(ive(0, 1.0)) + 1.0)


@given(st.integers(1, 3), st.integers(0, 10 ** 6), st.floats(0.05, 2.0))
def test_contour_matches_sphere_quadrature(N, seed, beta):
    M = sym(seed, N)
    ref = sphere_log_partition(M, beta)
    assert contour_log_partition(eigenvalues(M), beta) == pytest.approx(ref, abs=1e-10 * max(1, abs(ref)))


def test_mc_matches_quadrature_n3():
    M = sym(9, 3)
    q = sphere_log_partition(M, 0.6)
    mc, se = sphere_log_partition_mc(M, 0.6, n=200000, seed=2)
    assert abs(mc - q) <= 3 * se


def test_direct_oracle_domains():
    with pytest.raises(ValueError):
        direct_partition_smallN(np.eye(4), 0.3)
    with pytest.raises(ValueError):
        direct_partition_smallN(np.eye(13), 0.3, method="monte_carlo", n=100)
    with pytest.raises(ValueError):
        direct_partition_smallN(np.eye(2), 0.3, method="nope")


@given(st.integers(0, 10 ** 5), st.floats(0.0, 1.0))
def test_contour_abscissa_invariance(seed, shift_frac):
    s = goe_spectrum(50, seed)
    beta = TransitionParams(2.0, 0.0).beta(50)
    cp = critical_point(s, beta)
    shifted = s.lambda1 + 0.05 * cp.offset + shift_frac * (cp.gamma + 1 - s.lambda1)
    a = contour_log_partition(s, beta)
    b = contour_log_partition(s, beta, abscissa=shifted)
    assert abs(a - b) <= 1e-8 * max(1.0, abs(a))


def test_contour_rejects_bad_abscissa():
    s = goe_spectrum(10, 1)
    with pytest.raises(ValueError):
        contour_log_partition(s, 0.3, abscissa=s.lambda1)


def test_steepest_descent_close_to_exact():
    p = TransitionParams(2.0, 0.0)
    for seed in range(5):
        s = goe_spectrum(200, seed)
        fb = free_energy_breakdown(s, p)
        assert abs(fb.F_sd - fb.F_exact) <= 1e-3
    with pytest.raises(ValueError):
        steepest_descent_logZ(Spectrum(np.array([0.5]), 2.0), 0.3)


def test_transitional_terms_bookkeeping():
    p = TransitionParams(2.0, 1.0)
    s = goe_spectrum(100, 3)
    t = transitional_free_energy(s, p)
    assert t.total - (t.tildeF + t.partial_ls_g + t.Q_chi) == 0
    fb = free_energy_breakdown(s, p)
    assert fb.F_transitional == t.total
    d = fb.to_dict()
    assert d["terms"]["Q_chi"] == t.Q_chi and d["N"] == 100


def test_transitional_rejects_rigidity_violation():
    s = Spectrum(np.array([3.0, 2.6, 0.0]), 2.0)
    with pytest.raises(RigidityViolation):
        transitional_free_energy(s, TransitionParams(2.0, 0.0))
    with pytest.raises(ValueError):
        transitional_free_energy(goe_spectrum(10, 0, J=3.0), TransitionParams(2.0, 0.0))


def test_regime_fluctuation_part_examples():
    assert regime_fluctuation_part(Spectrum(np.array([2.5, 0.0]), 2.0), 1.0, 2.0) == 0.0
    beta = 0.2
    val = regime_fluctuation_part(Spectrum(np.array([0.0]), 0.5), beta, 0.5)
    assert val == pytest.approx(-0.5 * math.log(2 * beta + 1 / (2 * beta)))
    with pytest.raises(ValueError):
        regime_fluctuation_part(Spectrum(np.array([5.0]), 0.5), beta, 0.5)


def test_ferro_branch_predicts_paired_differences():
    # at fixed beta in the ferromagnetic phase, F differences follow (beta - 1/2J) times lambda_1 differences
    J, beta, N = 2.0, 0.6, 400
    pairs = [(goe_spectrum(N, 2 * k), goe_spectrum(N, 2 * k + 1)) for k in range(20)]
    errs = []
    for a, b in pairs:
        exact = (contour_log_partition(a, beta) - contour_log_partition(b, beta)) / N
        pred = regime_fluctuation_part(a, beta, J) - regime_fluctuation_part(b, beta, J)
        errs.append(abs(exact - pred))
    assert np.median(errs) <= N ** (-1 + 0.3)
