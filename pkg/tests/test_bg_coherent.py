import cmath
import math

import numpy as np
import pytest
import scipy.special as sc
from hypothesis import given, settings
from hypothesis import strategies as st

from timeops.bg_coherent import (
    MAX_TRUNCATION,
    POSITIVE,
    PRINCIPAL,
    DegreeOverflow,
    AnalyticPoly,
    TruncationError,
    analytic_apply,
    auto_truncation,
    bg_state,
    bg_state_exponential,
    branch_angle,
    default_quadrature,
    eigen_residual,
    from_analytic,
    identity_block,
    overlap,
    radial_moments,
    radial_moments_exact,
    resolution_of_identity,
    to_analytic,
    verify_coherent_states,
)
from timeops.specfun import radial_quadrature
from timeops.su11_fock import ModelParams

labels = st.complex_numbers(max_magnitude=3.0, allow_nan=False, allow_infinity=False)


def _direct_coeffs(z, k, N):
    # c_n = |z|^{k-1/2} e^{i(k-1/2)theta} z^n / sqrt(I_{2k-1}(2|z|) n! Gamma(2k+n))
    r, th = abs(z), cmath.phase(z)
    n = np.arange(N)
    logmag = (k - 0.5) * math.log(r) - 0.5 * (math.log(sc.ive(2 * k - 1, 2 * r)) + 2 * r)
    logmag = logmag + n * math.log(r) - 0.5 * (sc.gammaln(n + 1) + sc.gammaln(2 * k + n))
    return np.exp(logmag) * np.exp(1j * ((k - 0.5) * th + n * th))


@pytest.mark.parametrize("z", [0.7, 1 + 1j, -2.5 + 0.1j, 3j])
def test_state_against_scipy_oracle(z, params_k):
    st_ = bg_state(z, params_k, 64)
    np.testing.assert_allclose(st_.coeffs, _direct_coeffs(z, params_k.k, 64), rtol=1e-12, atol=1e-15)


@settings(max_examples=60, deadline=None)
@given(labels)
def test_eigen_residual_auto_truncation(z):
    p = ModelParams()
    st_ = bg_state(z, p)
    assert st_.N == auto_truncation(z)
    assert eigen_residual(st_, p) <= 1e-10
    assert abs(st_.norm() - 1.0) < 1e-12


def test_vacuum_label():
    st_ = bg_state(0, ModelParams(), 8)
    np.testing.assert_array_equal(st_.coeffs, np.eye(8)[0])


def test_truncation_growth_and_error():
    p = ModelParams()
    st_ = bg_state(20.0, p, 32)
    assert st_.N > 32 and st_.tail <= 1e-15
    with pytest.raises(TruncationError):
        bg_state(20.0, p, 32, auto_enlarge=False)
    assert MAX_TRUNCATION >= 64


@pytest.mark.parametrize("z", [0.5, -1 + 2j, 2.9j])
def test_two_constructions_agree(z, params_k):
    a = bg_state(z, params_k, 48)
    b = bg_state_exponential(z, params_k, 48)
    assert np.abs(a.coeffs - b.coeffs).max() <= 1e-12


@pytest.mark.parametrize("x1,x2", [(0.5, 1.0), (2.0, 2.0), (1.3, 3.0)])
def test_overlap_against_bessel_oracle(x1, x2, params_k):
    # real positive labels: <x1|x2> = I(2 sqrt(x1 x2)) / sqrt(I(2 x1) I(2 x2))
    nu = 2 * params_k.k - 1
    ref = sc.iv(nu, 2 * math.sqrt(x1 * x2)) / math.sqrt(sc.iv(nu, 2 * x1) * sc.iv(nu, 2 * x2))
    assert overlap(x1, x2, params_k) == pytest.approx(ref, rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(labels, labels)
def test_overlap_against_inner_product(z1, z2):
    p = ModelParams(g=0.5)
    n = max(auto_truncation(z1), auto_truncation(z2))
    direct = np.vdot(bg_state(z1, p, n).coeffs, bg_state(z2, p, n).coeffs)
    assert abs(overlap(z1, z2, p) - direct) <= 1e-10 * abs(direct)


def test_overlap_self_is_one():
    assert overlap(1 - 2j, 1 - 2j, ModelParams()) == pytest.approx(1.0, abs=1e-14)
    with pytest.raises(ValueError):
        overlap(60.0, 1.0, ModelParams())


def test_branch_conventions():
    assert branch_angle(-1.0, PRINCIPAL) == pytest.approx(math.pi)
    assert branch_angle(-1j, PRINCIPAL) == pytest.approx(-math.pi / 2)
    assert branch_angle(-1j, POSITIVE) == pytest.approx(1.5 * math.pi)
    a = bg_state(-1 - 1j, ModelParams(), 32, PRINCIPAL).coeffs
    b = bg_state(-1 - 1j, ModelParams(), 32, POSITIVE).coeffs
    # only the global phase differs; projectors agree
    assert np.abs(np.outer(a, a.conj()) - np.outer(b, b.conj())).max() < 1e-15
    assert np.abs(a - b).max() > 0.1


def test_analytic_realization():
    k = 1.25
    f = to_analytic(np.eye(6)[2], k)
    # K- z^2 = 2 (1 + 2k) z
    g = analytic_apply("Kminus", f)
    np.testing.assert_allclose(g.coeffs[1], 2 * (1 + 2 * k) * f.coeffs[2])
    np.testing.assert_allclose(from_analytic(f), np.eye(6)[2], atol=1e-15)
    with pytest.raises(DegreeOverflow):
        analytic_apply("Kplus", AnalyticPoly(np.eye(4)[3], k))
    with pytest.raises(ValueError):
        analytic_apply("K9", f)


def test_coherent_report(params_k):
    rep = verify_coherent_states(params_k)
    assert rep.passed, rep.summary_lines()


def test_radial_moments_match_mellin_identity(params_k):
    # K_nu(2r) r^{2k+P} carries an r^{4k-1+P} term, non-smooth at r = 0 for
    # non-integer 4k; at k = 0.8 that limits the rule to ~3e-10
    quad = default_quadrature(params_k, 12)
    np.testing.assert_allclose(
        radial_moments(params_k.k, 22, quad), radial_moments_exact(params_k.k, 22), rtol=1e-9
    )


def test_radial_moments_are_order_independent():
    p = ModelParams()
    quad = default_quadrature(p, 8)
    rev = radial_quadrature(quad.r_max, quad.radial_count)
    np.testing.assert_array_equal(radial_moments(p.k, 6, quad), radial_moments(p.k, 6, rev))


@pytest.mark.parametrize("g", [0.5, 2.0, 8.0])
def test_resolution_of_identity(g):
    rep = resolution_of_identity(ModelParams(g=g))
    assert rep.passed, rep.summary_lines()


def test_resolution_guards():
    p = ModelParams()
    with pytest.raises(ValueError):
        resolution_of_identity(p, N_check=17)
    with pytest.raises(ValueError):
        resolution_of_identity(p, quad=radial_quadrature(30.0, 50))


def test_identity_block_is_hermitian():
    p = ModelParams()
    b = identity_block(p, 6, default_quadrature(p, 6))
    assert np.abs(b - b.conj().T).max() < 1e-14
