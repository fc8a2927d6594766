import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from roughheat import (ConfigError, CutoffFunction, ErrorReport, GridError, HurstPair, SheetConfig,
                       cutoff_eval, fit_rate, h_neg_alpha_norm, mild_solution, reconstruct,
                       run_specialized_scheme, sample_sheet, scheme_error, window_grid)

HP = HurstPair(0.25, 0.25)
RHO = CutoffFunction(1.0)

# frozen at first build: pinned seed 7, n = 1, kappa = 0.1, alpha = 0.6, spacing 2^-2n, P = 4
SCHEME_ERROR_BASELINE = 0.0011064237298677513


def trapezoid_l2(x, g):
    d = x[1] - x[0]
    return math.sqrt(d * (np.sum(g**2) - 0.5 * (g[0] ** 2 + g[-1] ** 2)))


# ---- cutoff

def test_cutoff_examples():
    assert cutoff_eval(RHO, 0.0) == 1.0
    assert cutoff_eval(RHO, 1.0) == 0.0
    assert RHO(-1.0) == 0.0 and RHO(3.0) == 0.0
    x = np.linspace(0, 0.5, 101)
    assert np.all(RHO(x) == 1.0) and np.all(RHO(-x) == 1.0)
    with pytest.raises(ConfigError):
        CutoffFunction(0.0)


def test_cutoff_monotone_and_bounded():
    x = np.linspace(0.0, 1.5, 10001)
    v = CutoffFunction(1.2)(x)
    assert np.all(np.diff(v) <= 0)
    assert v.min() >= 0 and v.max() <= 1


def test_cutoff_is_flat_at_band_edges():
    # all one-sided derivatives vanish at R/2 and R: finite differences decay faster than any power
    rho = CutoffFunction(2.0)
    for edge, sign in ((1.0, 1), (2.0, -1)):
        for eps in (1e-2, 5e-3):
            jump = abs(rho(edge + sign * eps) - rho(edge))
            assert jump < eps**4


# ---- norm

def test_gaussian_l2_anchor():
    x = window_grid(6.0, 1 / 64)
    g = np.exp(-x**2 / 2) / math.sqrt(2 * math.pi)
    assert h_neg_alpha_norm(x, g, 0.0) == pytest.approx((1 / (2 * math.sqrt(math.pi))) ** 0.5, abs=1e-4)
    assert (1 / (2 * math.sqrt(math.pi))) ** 0.5 == pytest.approx(0.531126, abs=1e-6)


@settings(max_examples=30, deadline=None)
@given(st.floats(-5, 5).filter(lambda c: abs(c) > 1e-3), st.integers(0, 2**32 - 1),
       st.floats(0, 1), st.floats(0, 1))
def test_norm_homogeneous_and_monotone(c, seed, a1, a2):
    x = window_grid(1.0, 1 / 32)
    g = RHO(x) * np.random.default_rng(seed).standard_normal(x.size)
    base = h_neg_alpha_norm(x, g, a1, 4.0)
    assert h_neg_alpha_norm(x, c * g, a1, 4.0) == pytest.approx(abs(c) * base, rel=1e-12)
    lo, hi = sorted((a1, a2))
    assert h_neg_alpha_norm(x, g, lo, 4.0) >= h_neg_alpha_norm(x, g, hi, 4.0) * (1 - 1e-12)


def test_norm_alpha_zero_is_trapezoid_l2():
    # windowed samples vanish at the ends, where rectangle and trapezoid sums agree
    x = window_grid(1.0, 1 / 16)
    g = (np.cos(2 * x) + 0.3 * x) * RHO(x)
    assert h_neg_alpha_norm(x, g, 0.0, 4.0) == pytest.approx(trapezoid_l2(x, g), rel=1e-12)
    # unwindowed data: the DFT sum is the rectangle rule
    f = np.cos(2 * x) + 0.3 * x
    assert h_neg_alpha_norm(x, f, 0.0, 4.0) == pytest.approx(math.sqrt(np.sum(f**2) / 16), rel=1e-12)


def test_norm_shift_invariance():
    d = 1 / 16
    x = window_grid(1.0, d)
    g = RHO(x) * np.sin(5 * x)
    ref = h_neg_alpha_norm(x, g, 0.6, 4.0)
    for k in (-7, 3, 16):
        assert h_neg_alpha_norm(x + k * d, g, 0.6, 4.0) == pytest.approx(ref, abs=1e-10)


def test_norm_refinement_stable():
    f = lambda x: RHO(x) * np.exp(-3 * x**2) * np.cos(4 * x)
    x1, x2 = window_grid(1.0, 1 / 64), window_grid(1.0, 1 / 128)
    a = h_neg_alpha_norm(x1, f(x1), 0.6, 4.0)
    b = h_neg_alpha_norm(x2, f(x2), 0.6, 8.0)
    assert abs(a - b) / b < 1e-3


def test_norm_batched_rows():
    x = window_grid(1.0, 1 / 8)
    g = np.random.default_rng(3).standard_normal((4, x.size))
    out = h_neg_alpha_norm(x, g, 0.4, 4.0)
    assert out.shape == (4,)
    assert out[2] == pytest.approx(h_neg_alpha_norm(x, g[2], 0.4, 4.0), rel=1e-13)


def test_norm_input_errors():
    x = window_grid(1.0, 0.25)
    g = np.ones_like(x)
    with pytest.raises(GridError):
        h_neg_alpha_norm(np.r_[x[:-1], 1.1], g, 0.5)
    with pytest.raises(GridError):
        h_neg_alpha_norm(x, g, 0.5, pad=1.5)
    with pytest.raises(GridError):
        h_neg_alpha_norm(x + 0.1, g, 0.5, pad=4.0)
    with pytest.raises(GridError):
        h_neg_alpha_norm(x, g[:-1], 0.5)
    with pytest.raises(ConfigError):
        h_neg_alpha_norm(x, g, -0.1)
    with pytest.raises(GridError):
        window_grid(1.0, 0.3)


# ---- scheme error

@pytest.fixture(scope="module")
def pinned():
    s = sample_sheet(SheetConfig(HP, 0.1, 1, seed=7))
    st_ = run_specialized_scheme(s, save_indices=[16])
    x = window_grid(1.0, 0.25)
    return st_, x, mild_solution(s, 1.0, x)


def test_scheme_error_zero_and_constant_shift(pinned):
    st_, x, _ = pinned
    recon = reconstruct(st_.at(16), st_.basis, x)
    assert scheme_error(st_, x, recon, RHO, 0.6, 16, pad=4.0) == 0.0
    c = -0.37
    got = scheme_error(st_, x, recon + c, RHO, 0.6, 16, pad=4.0)
    assert got == pytest.approx(abs(c) * h_neg_alpha_norm(x, RHO(x), 0.6, 4.0), rel=1e-12)


def test_scheme_error_regression_baseline(pinned):
    st_, x, ref = pinned
    e1 = scheme_error(st_, x, ref, RHO, 0.6, 16, pad=4.0, hurst=HP)
    e2 = scheme_error(st_, x, ref, RHO, 0.6, 16, pad=4.0, hurst=HP)
    assert e1 == e2
    assert 0 < e1 < math.inf
    assert e1 == pytest.approx(SCHEME_ERROR_BASELINE, rel=1e-9)


def test_scheme_error_symmetric_and_triangle(pinned):
    st_, x, ref = pinned
    recon = reconstruct(st_.at(16), st_.basis, x)
    e = scheme_error(st_, x, ref, RHO, 0.6, 16, pad=4.0)
    assert h_neg_alpha_norm(x, RHO(x) * (ref - recon), 0.6, 4.0) == pytest.approx(e, rel=1e-14)
    third = ref + 0.01 * np.sin(3 * x)
    e13 = scheme_error(st_, x, third, RHO, 0.6, 16, pad=4.0)
    e32 = h_neg_alpha_norm(x, RHO(x) * (third - ref), 0.6, 4.0)
    assert e13 <= e + e32 + 1e-15


def test_scheme_error_guards(pinned):
    st_, x, ref = pinned
    with pytest.raises(ConfigError):
        scheme_error(st_, x, ref, RHO, 0.2, 16, pad=4.0, hurst=HP)
    with pytest.raises(GridError):
        scheme_error(st_, x, ref[:-1], RHO, 0.6, 16, pad=4.0)
    with pytest.raises(GridError):
        scheme_error(st_, x, ref, RHO, 0.6, 8, pad=4.0)


# ---- rate fit

def test_fit_rate_examples():
    r = fit_rate([1, 2, 3], [1, 0.5, 0.25])
    assert r.fitted_rate == pytest.approx(1.0) and r.residual == pytest.approx(0.0, abs=1e-12)
    assert fit_rate([1, 2, 3], [0.2, 0.2, 0.2]).fitted_rate == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ConfigError):
        fit_rate([1], [0.1])


def test_error_report_invariants():
    ErrorReport(0.6, (1, 2), (0.1, 0.0))
    with pytest.raises(ConfigError):
        ErrorReport(0.6, (2, 1), (0.1, 0.2))
    with pytest.raises(ConfigError):
        ErrorReport(0.6, (1, 2), (0.1, -0.2))
