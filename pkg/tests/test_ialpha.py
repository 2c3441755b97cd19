import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st

from sskcw.errors import ConvergenceError
from sskcw.ialpha import (SMALL_ALPHA_LIMIT, TABLE_RANGE, I_alpha, I_m, large_alpha_asymptote, log_I)


def oracle(alpha, m=0):
    """I_m on the line t = u - i*c, away from the branch point t = i (mpmath).

    The shift costs a factor exp(alpha c^2 / 4), so c shrinks like 1/sqrt(alpha).
    """
    mp.mp.dps = 30
    a = mp.mpf(alpha)
    c = mp.mpf(min(1.0, 2.0 / math.sqrt(alpha)))

    def f(u):
        t = u - 1j * c
        return t ** m * (1 + 1j * t) ** mp.mpf(-0.5) * mp.exp(-a * t * t / 4 + 1j * t / 2)

    L = float(mp.sqrt(200 / a)) + 10
    pts = list(np.linspace(-L, L, int(2 * L / 2) + 3))
    return complex(mp.quad(f, pts))


@pytest.mark.parametrize("alpha", [1e-2, 0.3, 1.0, 7.0, 100.0, 3000.0])
def test_matches_shifted_contour_oracle(alpha):
    assert I_m(alpha, 0).real == pytest.approx(oracle(alpha).real, rel=1e-8)
    assert abs(oracle(alpha).imag) < 1e-12 * abs(oracle(alpha))


def test_alpha_one_value():
    assert I_alpha(1.0) == pytest.approx(oracle(1.0).real, rel=1e-6)
    assert I_alpha(1.0) > 0


@pytest.mark.parametrize("m", [1, 2, 3])
def test_higher_moments_against_oracle(m):
    got = I_m(0.7, m)
    ref = oracle(0.7, m)
    assert got == pytest.approx(ref, rel=1e-7, abs=1e-9)
    # odd moments are purely imaginary, even ones real
    assert (got.real == 0) if m % 2 else (got.imag == 0)


def test_asymptotics():
    assert abs(I_alpha(100) / math.sqrt(4 * math.pi / 100) - 1) <= 0.05
    assert abs(I_alpha(1e-3) / math.sqrt(8 * math.pi / math.e) - 1) <= 0.01
    assert SMALL_ALPHA_LIMIT == pytest.approx(3.040694, abs=1e-6)
    assert float(large_alpha_asymptote(100)) == pytest.approx(0.354491, abs=1e-6)
    # the relative corrections shrink like 1/alpha and alpha
    r1 = abs(I_alpha(1e3) / float(large_alpha_asymptote(1e3)) - 1)
    r2 = abs(I_alpha(1e4) / float(large_alpha_asymptote(1e4)) - 1)
    assert r2 < r1 / 5
    assert abs(I_alpha(1e-5) / SMALL_ALPHA_LIMIT - 1) < abs(I_alpha(1e-3) / SMALL_ALPHA_LIMIT - 1) / 5


def test_positive_on_log_grid():
    grid = np.logspace(-4, 4, 50)
    assert all(I_alpha(a) > 0 for a in grid)


@given(st.floats(math.log(TABLE_RANGE[0]), math.log(TABLE_RANGE[1])))
def test_table_matches_direct(logalpha):
    a = math.exp(logalpha)
    assert float(log_I(a)) == pytest.approx(math.log(I_alpha(a)), abs=1e-8)


def test_log_I_vectorized_and_outside_table():
    a = np.array([[1e-7, 1.0], [5.0, 2e8]])
    out = log_I(a)
    assert out.shape == (2, 2)
    for idx in np.ndindex(2, 2):
        assert out[idx] == pytest.approx(math.log(I_alpha(a[idx])), abs=1e-8)


def test_rejects_bad_arguments():
    for bad in (0.0, -1.0, math.inf, math.nan):
        with pytest.raises(ValueError):
            I_m(bad)
    with pytest.raises(ValueError):
        I_m(1.0, m=-1)
    with pytest.raises(ValueError):
        log_I(np.array([1.0, 0.0]))


def test_convergence_error_is_raised_when_unstable(monkeypatch):
    import sskcw.ialpha as mod
    widths = []
    real = mod._panel_sum

    def perturbed(alpha, m, T, width):
        widths.append(width)
        return real(alpha, m, T, width) * (1 + 1e-6 * len(widths))

    monkeypatch.setattr(mod, "_panel_sum", perturbed)
    with pytest.raises(ConvergenceError):
        I_m(1.0)
