import cmath
import math

import numpy as np
import pytest
import sympy as sp

from p2mu.errors import DomainError, RealityError
from p2mu.series import (OPTIMAL, boutroux_forward, boutroux_inverse, compute_coefficients,
                         default_table, formal_series, negative_axis_sign, sigma,
                         truncation_residual)
from p2mu.specfun import ProblemSpec

from oracles import brute_force_coefficients, exact_series_coefficient

N_CHECK = 8


@pytest.mark.parametrize("mu", [1, 2, 3, 4, 5])
def test_coefficients_match_brute_force(mu):
    brute = brute_force_coefficients(mu, N_CHECK)
    coeffs = compute_coefficients(mu, N_CHECK)
    alpha2 = sp.Rational(mu + 2, 2) ** 2
    for n in range(N_CHECK + 1):
        assert sp.simplify(brute[n] - exact_series_coefficient(coeffs, n)) == 0
        # the table stores the Boutroux-variable coefficient; b_n = a_n alpha^(2n)
        got = coeffs.a[n] * float(alpha2 ** n)
        assert got == pytest.approx(complex(sp.N(brute[n], 30)), rel=1e-13, abs=1e-300)


@pytest.mark.parametrize("mu", [1, 2, 3, 6])
def test_coefficients_purely_imaginary(mu):
    a = compute_coefficients(mu, 20).a
    assert np.all(a.real == 0.0)
    assert a[0] == pytest.approx(1j / math.sqrt(2))


def test_first_coefficient_closed_form():
    for mu in range(1, 9):
        q1 = compute_coefficients(mu, 1).q[1]
        assert q1 == sp.Rational(-mu * (mu - 2), 2 * (mu + 2) ** 2)
        assert q1 == sigma(mu, 1)
    assert compute_coefficients(2, 3).a[1] == 0


def test_exact_and_float_agree():
    ex = compute_coefficients(3, 25, exact=True).imag
    fl = compute_coefficients(3, 25, exact=False).imag
    np.testing.assert_allclose(fl, ex, rtol=1e-12)


def test_coefficients_grow_factorially():
    im = np.abs(default_table(1).imag)
    ratios = im[21:41] / im[20:40]
    # consecutive ratios grow roughly linearly in n (Gevrey-1)
    assert np.all(np.diff(ratios) > 0)


@pytest.mark.parametrize("bad", [-1, 2.5])
def test_invalid_order(bad):
    with pytest.raises(DomainError):
        compute_coefficients(1, bad)


def test_invalid_mu():
    with pytest.raises(DomainError):
        compute_coefficients(0, 3)


@pytest.mark.parametrize("mu", [1, 2, 3])
@pytest.mark.parametrize("x", [2.0 + 0.5j, -3.0 + 1.0j, 0.7 - 2.0j])
def test_boutroux_round_trip(mu, x):
    spec = ProblemSpec(mu)
    y, yp = 0.3 - 0.1j, -1.2 + 0.4j
    pt = boutroux_forward(spec, x, y, yp)
    x2, y2, yp2 = boutroux_inverse(spec, pt.z, pt.u, pt.du, arg=cmath.phase(x))
    assert x2 == pytest.approx(x, rel=1e-13)
    assert y2 == pytest.approx(y, rel=1e-13)
    assert yp2 == pytest.approx(yp, rel=1e-12)


def test_boutroux_singular_points():
    spec = ProblemSpec(1)
    with pytest.raises(DomainError):
        boutroux_forward(spec, 0.0, 1.0, 1.0)
    with pytest.raises(DomainError):
        boutroux_inverse(spec, 0.0, 1.0, 1.0)


@pytest.mark.parametrize("mu", [1, 3, 5])
def test_real_mode_matches_principal_branch(mu):
    spec = ProblemSpec(mu)
    tab = default_table(mu)
    x = -6.0
    real = formal_series(spec, tab, x, real=True)
    cplx = formal_series(spec, tab, complex(x), sign=negative_axis_sign(mu))
    assert isinstance(real.y, float) and real.y > 0
    assert cplx.y == pytest.approx(real.y, rel=1e-13)
    assert abs(cplx.y.imag) < 1e-13 * abs(real.y)
    assert cplx.yp == pytest.approx(real.yp, rel=1e-13)


def test_real_mode_rejected_for_even_mu():
    spec = ProblemSpec(2)
    with pytest.raises(RealityError):
        formal_series(spec, default_table(2), -4.0, real=True)
    with pytest.raises(RealityError):
        truncation_residual(2, 3, -20.0)


def test_real_mode_needs_negative_x():
    with pytest.raises(DomainError):
        formal_series(ProblemSpec(1), default_table(1), 4.0, real=True)


def test_mismatched_table():
    with pytest.raises(DomainError):
        formal_series(ProblemSpec(1), default_table(3), 4.0)


def test_unreliable_region_warns():
    with pytest.warns(RuntimeWarning):
        formal_series(ProblemSpec(1), default_table(1), 0.3 + 0.1j)


def test_optimal_truncation_stops_before_smallest_term():
    spec = ProblemSpec(1)
    sv = formal_series(spec, default_table(1), -5.0, real=True)
    assert 1 < sv.n_terms <= 61
    assert sv.error_estimate < 1e-5 * abs(sv.y)
    # further out the optimal sum uses more terms and gets more accurate
    far = formal_series(spec, default_table(1), -10.0, real=True)
    assert far.n_terms > sv.n_terms and far.error_estimate < 1e-13 * abs(far.y)


def test_derivative_series_consistent():
    spec = ProblemSpec(3)
    tab = default_table(3)
    x, h = -5.0, 1e-5
    sv = formal_series(spec, tab, x, N=10, real=True)
    fd = (formal_series(spec, tab, x + h, N=10, real=True).y
          - formal_series(spec, tab, x - h, N=10, real=True).y) / (2 * h)
    assert sv.yp == pytest.approx(fd, rel=1e-8)


@pytest.mark.parametrize("mu", [1, 3, 4])
def test_residual_decays_with_absolute_slope(mu):
    # |R_N| ~ |x|^(3mu/2 - (mu+2)(N+1)) along a principal-branch ray
    N = 2
    xs = np.array([10.0, 20.0, 40.0, 80.0]) * cmath.exp(0.3j)
    r = [truncation_residual(mu, N, complex(x)) for x in xs]
    slope = np.polyfit(np.log(np.abs(xs)), np.log(r), 1)[0]
    assert slope == pytest.approx(1.5 * mu - (mu + 2) * (N + 1), rel=0.02)


def test_optimal_is_a_valid_order_name():
    spec = ProblemSpec(1)
    assert formal_series(spec, default_table(1), 10.0, N=OPTIMAL).n_terms > 0
    with pytest.raises(DomainError):
        formal_series(spec, compute_coefficients(1, 3), 10.0, N=5)


def test_even_two_series_terminates():
    # for mu = 2 every correction vanishes: y = i x / sqrt(2) solves the equation exactly
    assert np.all(compute_coefficients(2, 12).a[1:] == 0)
    assert truncation_residual(2, 0, 7.0 + 2.0j) < 1e-50


def test_low_order_values_mu1():
    a = compute_coefficients(1, 2).a
    assert a[1] == pytest.approx(1j / (18 * math.sqrt(2)), rel=1e-15)
    assert a[2] == pytest.approx(-73j / (648 * math.sqrt(2)), rel=1e-15)
