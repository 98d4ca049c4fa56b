import math

import numpy as np
import pytest

from timeops.su11_fock import (
    ModelParams,
    build_generators,
    canonical_partner,
    casimir,
    energy_eigenstate_20,
    ladder_elements,
    vacuum_limit_diagnostic,
    verify_algebra,
    verify_fock_normalization,
    verify_identity_17,
    verify_identity_18,
    verify_similarity_19,
)
from timeops.operators import interior_size


def test_bargmann_index_and_casimir_value():
    p = ModelParams(g=2.0)
    assert p.k == 1.25
    assert p.casimir_value == 0.3125
    assert p.k * (p.k - 1) == pytest.approx(p.casimir_value, abs=1e-15)
    assert ModelParams(g=0.0).casimir_value == -3 / 16


@pytest.mark.parametrize("field,value", [("omega", 0.0), ("omega", math.inf), ("g", -1.0), ("g", math.nan)])
def test_params_validation(field, value):
    with pytest.raises(ValueError):
        ModelParams(**{field: value})


def test_from_k_round_trip():
    for k in (0.8, 1.25, 3.0):
        assert ModelParams.from_k(k).k == pytest.approx(k, rel=1e-14)
    with pytest.raises(ValueError):
        ModelParams.from_k(0.6)


def test_ladder_elements_match_fock_formula():
    k, N = 1.25, 10
    n = np.arange(N - 1)
    np.testing.assert_array_equal(ladder_elements(k, N), np.sqrt((n + 1) * (n + 2 * k)))
    gen = build_generators(ModelParams(g=2.0), N)
    np.testing.assert_array_equal(np.diag(gen.K3.entries).real, np.arange(N) + k)
    np.testing.assert_array_equal(gen.Kminus.entries, gen.Kplus.entries.conj().T)


def test_algebra_report(params_k):
    rep = verify_algebra(params_k, 64)
    assert rep.passed, rep.summary_lines()
    assert rep.value("casimir interior value") == pytest.approx(params_k.casimir_value, abs=1e-12)


@pytest.mark.parametrize("g", [0.0, 0.5, 2.0, 8.0])
def test_casimir_interior(g):
    p = ModelParams(g=g)
    c = casimir(p, 64).entries
    m = interior_size(64)
    np.testing.assert_allclose(c[:m, :m], (4 * g - 3) / 16 * np.eye(m), atol=1e-12)


def test_fock_states_from_vacuum():
    assert verify_fock_normalization(ModelParams(), 32) < 1e-12


def test_canonical_partner_identities(params_k):
    assert verify_identity_17(params_k, 64, 3).passed
    rep = verify_identity_18(params_k, 64)
    assert rep.passed
    # truncated: (K- A)_{N-1,N-1} = 0 and (A K-)_{N-1,N-1} = N - 1, so the entry is -N
    assert rep.value("entry (N-1,N-1) deviation") == pytest.approx(64.0, rel=1e-12)


def test_canonical_partner_is_nilpotent():
    a = canonical_partner(ModelParams(), 12).entries
    assert not np.any(np.linalg.matrix_power(a, 12))


def test_similarity_19_trend():
    rep = verify_similarity_19(ModelParams())
    assert rep.trends_passed
    rows = dict(rep.convergence["block residual vs N"])
    assert rows[64] <= rows[32] / 10 and rows[128] <= rows[64] / 10


def test_energy_state():
    vec, rep = energy_eigenstate_20(ModelParams(), 64, E=0.5)
    assert rep.trends_passed
    assert rep.value("coherent label z") == -0.25
    _, rep1 = energy_eigenstate_20(ModelParams(), 32, E=1.0)
    assert rep1.value("coherent label z") == -0.5
    with pytest.raises(ValueError):
        energy_eigenstate_20(ModelParams(), 32, E=0.0)


def test_vacuum_limit_residual_does_not_vanish():
    rep = vacuum_limit_diagnostic(ModelParams(), 64)
    assert rep.value("full-vector residual |H v|/|v|") > 0.1
