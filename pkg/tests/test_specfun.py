import math

import numpy as np
import pytest
import scipy.special as sc
from hypothesis import given, settings
from hypothesis import strategies as st

from timeops.specfun import (
    SpecialFunctionError,
    bessel_I,
    bessel_Ie,
    bessel_K,
    bessel_Ke,
    decay_cutoff,
    gamma_fn,
    gauss_legendre,
    ln_gamma,
    log_bessel_I,
    log_bessel_K,
    radial_quadrature,
)

# scipy kve returns nan for subnormal orders, so those are kept out
orders = st.one_of(st.just(0.0), st.floats(1e-6, 12.0))
args = st.floats(1e-3, 60.0, allow_nan=False)


def test_gamma_values():
    assert gamma_fn(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-15)
    assert gamma_fn(5.0) == 24.0
    assert ln_gamma(200.0) == pytest.approx(sc.gammaln(200.0), rel=1e-15)


@pytest.mark.parametrize("x", [0.0, -1.0, -2.5])
def test_gamma_domain(x):
    with pytest.raises(SpecialFunctionError):
        gamma_fn(x)
    with pytest.raises(SpecialFunctionError):
        ln_gamma(x)


def test_gamma_overflow():
    with pytest.raises(OverflowError):
        gamma_fn(172.0)


@settings(max_examples=200, deadline=None)
@given(orders, args)
def test_bessel_against_scipy(nu, x):
    assert bessel_Ie(nu, x) == pytest.approx(sc.ive(nu, x), rel=1e-12)
    assert bessel_Ke(nu, x) == pytest.approx(sc.kve(nu, x), rel=1e-12)


@settings(max_examples=200, deadline=None)
@given(orders, args)
def test_wronskian(nu, x):
    # I_nu K_{nu+1} + I_{nu+1} K_nu = 1/x
    w = bessel_Ie(nu, x) * bessel_Ke(nu + 1.0, x) + bessel_Ie(nu + 1.0, x) * bessel_Ke(nu, x)
    assert w * x == pytest.approx(1.0, rel=1e-12)


def test_half_integer_closed_forms():
    x = np.array([0.1, 1.0, 7.5])
    np.testing.assert_allclose(bessel_K(0.5, x), np.sqrt(np.pi / (2 * x)) * np.exp(-x), rtol=1e-14)
    np.testing.assert_allclose(bessel_I(0.5, x), np.sqrt(2 / (np.pi * x)) * np.sinh(x), rtol=1e-14)


def test_log_forms_reach_large_arguments():
    # direct values overflow/underflow a double here
    assert log_bessel_I(2.0, 1000.0) == pytest.approx(math.log(sc.ive(2.0, 1000.0)) + 1000.0, rel=1e-14)
    assert log_bessel_K(2.0, 1000.0) == pytest.approx(math.log(sc.kve(2.0, 1000.0)) - 1000.0, rel=1e-14)


def test_bessel_small_argument_limits():
    assert bessel_I(0.0, 0.0) == 1.0
    assert bessel_I(1.5, 0.0) == 0.0
    with pytest.raises(SpecialFunctionError):
        bessel_K(1.0, 0.0)


def test_gauss_legendre_exactness():
    x, w = gauss_legendre(10, 0.0, 2.0)
    for p in range(20):
        assert np.sum(w * x**p) == pytest.approx(2.0 ** (p + 1) / (p + 1), rel=1e-13)
    with pytest.raises(ValueError):
        gauss_legendre(0)
    with pytest.raises(ValueError):
        gauss_legendre(4, 1.0, 1.0)


@pytest.mark.parametrize("nu,P", [(0.6, 0), (1.5, 6), (5.0, 22)])
def test_radial_mellin_integral(nu, P):
    # the time-operator moments have power nu + 1 + P, smooth at r = 0
    power = nu + 1.0 + P
    # int_0^inf K_nu(2r) r^s dr = Gamma((s+1+nu)/2) Gamma((s+1-nu)/2) / 4
    quad = radial_quadrature(decay_cutoff(nu, power), 200)
    val = math.fsum(quad.radial_weights * bessel_K(nu, 2.0 * quad.radial_nodes) * quad.radial_nodes**power)
    exact = 0.25 * math.gamma(0.5 * (power + 1 + nu)) * math.gamma(0.5 * (power + 1 - nu))
    assert val == pytest.approx(exact, rel=1e-10)


def test_decay_cutoff_rejects_nonintegrable():
    with pytest.raises(ValueError):
        decay_cutoff(2.0, 1.0)
