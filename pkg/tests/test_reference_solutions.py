import math

import numpy as np
import pytest
from scipy import integrate, special

from roughheat import (ConfigError, HurstPair, SheetConfig, SheetSample, gamma, heat_space_integral,
                       mild_solution, sample_sheet, solution_covariance)

HP = HurstPair(0.25, 0.25)


def unit_cell_sheet(n=1):
    # one unit increment on [0, 2^-n) x [0, 2^-n), nothing else
    v = np.zeros((2**n + 1, 2 ** (2 * n + 1) + 1))
    v[1:, 2 ** (2 * n) + 1:] = 1.0
    return SheetSample(n, v)


# ---- gamma

def test_gamma_closed_forms():
    for t in (0.3, 1.0):
        for r in (0.5, 2.0):
            assert gamma(t, 0.0, r) == pytest.approx((1 - math.exp(-t * r * r)) / r**2)
        assert gamma(t, 0.0, 0.0) == t
    assert gamma(0.0, 3.0, 1.0) == 0.0


def test_gamma_matches_defining_integral():
    t, xi, r = 0.7, 2.0, 1.5
    re = integrate.quad(lambda s: math.cos(xi * (t - s)) * math.exp(-s * r * r), 0, t, epsabs=1e-14)[0]
    im = integrate.quad(lambda s: math.sin(xi * (t - s)) * math.exp(-s * r * r), 0, t, epsabs=1e-14)[0]
    assert abs(gamma(t, xi, r) - complex(re, im)) <= 1e-10


def test_gamma_small_argument_is_continuous():
    assert gamma(0.5, 1e-13, 0.0) == pytest.approx(0.5, abs=1e-12)
    assert abs(gamma(0.5, 1e-9, 0.0) - 0.5) < 1e-8


def test_gamma_bound_on_lattice():
    xi, r = np.meshgrid(np.linspace(-40, 40, 161), np.linspace(0, 8, 81))
    for t in (0.1, 0.5, 1.0):
        g = np.abs(gamma(t, xi, r))
        z = np.abs(r**2 + 1j * xi)
        bound = np.minimum(t, np.where(z > 0, 2 / np.where(z > 0, z, 1), np.inf))
        assert np.all(g <= bound * (1 + 1e-12))


# ---- heat kernel space integral

def test_heat_space_integral_examples():
    assert heat_space_integral(1.0, 0.0, -50.0, 50.0) >= 1 - 1e-12
    for tau, c in ((0.1, 0.3), (2.0, 1.5)):
        assert heat_space_integral(tau, 0.0, -c, c) == pytest.approx(special.erf(c / math.sqrt(4 * tau)))
    y = np.linspace(0.0, 1.0, 100001)
    g = np.exp(-(0.3 - y) ** 2 / 1.0) / math.sqrt(math.pi)
    assert abs(heat_space_integral(0.25, 0.3, 0.0, 1.0) - integrate.trapezoid(g, y)) <= 1e-9
    with pytest.raises(ConfigError):
        heat_space_integral(0.0, 0.0, 0.0, 1.0)


# ---- mild solution

def test_mild_solution_zero_sheet():
    s = SheetSample(1, np.zeros((3, 9)))
    assert mild_solution(s, 0.5, 0.1) == 0.0
    assert not np.any(mild_solution(s, 1.0, np.linspace(-1, 1, 5)))


def test_mild_solution_single_increment_vs_trapezoid():
    s = unit_cell_sheet(1)
    x = np.array([-0.7, 0.0, 0.25, 1.3])
    got = mild_solution(s, 1.0, x)
    # brute force: 4 * int_0^{1/2} ds int_0^{1/2} dy G_{1-s}(x - y)
    ss = np.linspace(0.0, 0.5, 1201)
    yy = np.linspace(0.0, 0.5, 1201)
    S, Y = np.meshgrid(ss, yy, indexing="ij")
    for xv, g in zip(x, got):
        tau = 1.0 - S
        kern = np.exp(-((xv - Y) ** 2) / (4 * tau)) / np.sqrt(4 * np.pi * tau)
        ref = 4.0 * integrate.trapezoid(integrate.trapezoid(kern, yy, axis=1), ss)
        assert g == pytest.approx(ref, abs=1e-6)


def test_mild_solution_inside_active_slab_vs_quadrature():
    # t inside the forcing interval exercises the s -> t singularity
    s = unit_cell_sheet(1)
    t, xv = 0.3, 0.2
    f = lambda sv: 4.0 * heat_space_integral(t - sv, xv, 0.0, 0.5)
    ref = integrate.quad(f, 0.0, t, limit=400, epsabs=1e-13, epsrel=1e-12)[0]
    assert mild_solution(s, t, xv) == pytest.approx(ref, rel=1e-7)


def test_mild_solution_linear_in_sheet():
    a = sample_sheet(SheetConfig(HP, 0.1, 1, 2000, 200, seed=1))
    b = sample_sheet(SheetConfig(HP, 0.1, 1, 2000, 200, seed=2))
    x = np.linspace(-1, 1, 9)
    lhs = mild_solution(a + b, 0.8, x)
    rhs = mild_solution(a, 0.8, x) + mild_solution(b, 0.8, x)
    assert np.max(np.abs(lhs - rhs)) <= 1e-10


@pytest.mark.parametrize("n", [1, 2])
def test_mild_solution_small_time(n):
    s = sample_sheet(SheetConfig(HP, 0.1, n, 2000, 200, seed=4))
    val = mild_solution(s, 2.0 ** (-4 * n), np.linspace(-1, 1, 7))
    assert np.max(np.abs(val)) <= 10 * np.max(np.abs(s.increments))


def test_mild_solution_reproducible_and_validated():
    s = sample_sheet(SheetConfig(HP, 0.1, 1, 2000, 200, seed=6))
    x = np.linspace(-1, 1, 17)
    assert np.array_equal(mild_solution(s, 1.0, x), mild_solution(s, 1.0, x))
    assert isinstance(mild_solution(s, 1.0, 0.3), float)
    for t in (0.0, 1.5, -0.1):
        with pytest.raises(ConfigError):
            mild_solution(s, t, 0.0)


# ---- spectral covariance

def test_solution_covariance_vanishes_at_time_zero():
    c = SheetConfig(HP, 1.0, 1)
    assert solution_covariance(0.0, 1.0, 0.1, 0.2, c, 50, 50) == 0.0
    assert solution_covariance(0.7, 0.0, 0.1, 0.2, c, 50, 50) == 0.0


def test_solution_covariance_translation_invariant():
    c = SheetConfig(HP, 1.0, 1)
    a = solution_covariance(0.5, 1.0, 0.3, -0.2, c, 120, 120)
    b = solution_covariance(0.5, 1.0, 1.3, 0.8, c, 120, 120)
    assert a == pytest.approx(b, rel=1e-12)


def test_solution_covariance_refinement():
    c = SheetConfig(HP, 1.0, 1)
    base = solution_covariance(1.0, 1.0, 0.0, 0.0, c, 400, 400)
    fine = solution_covariance(1.0, 1.0, 0.0, 0.0, c, 1600, 1600)
    assert base > 0
    assert base == pytest.approx(fine, rel=1e-2)


def test_solution_covariance_needs_cutoff():
    with pytest.raises(ConfigError):
        solution_covariance(1.0, 1.0, 0.0, 0.0, SheetConfig(HP, math.inf, 1))
