import numpy as np
import pytest
import scipy.linalg as sla

from timeops.operators import (
    Basis,
    BasisMismatch,
    MatrixFunctionError,
    OperatorMatrix,
    SchurArctan,
    arctan_matrix,
    commutator,
    expm,
    expm_nilpotent,
    interior_size,
)

FOCK = Basis("fock", (1.25,))


def _random(n, seed=0, scale=1.0):
    rng = np.random.default_rng(seed)
    return scale * (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))


def test_basis_mismatch_is_refused():
    a = OperatorMatrix(np.eye(3), FOCK)
    b = OperatorMatrix(np.eye(3), Basis("fock", (2.0,)))
    with pytest.raises(BasisMismatch):
        a + b
    with pytest.raises(BasisMismatch):
        commutator(a, b)
    with pytest.raises(ValueError):
        OperatorMatrix(np.zeros((2, 3)), FOCK)


def test_operator_matrix_is_read_only():
    a = OperatorMatrix(np.eye(2), FOCK)
    with pytest.raises(ValueError):
        a.entries[0, 0] = 2.0


def test_commutator_and_hermiticity():
    a = OperatorMatrix(_random(5), FOCK)
    h = OperatorMatrix(a.entries + a.entries.conj().T, FOCK)
    assert h.hermiticity_defect() == 0.0
    c = commutator(a, a)
    assert np.abs(c.entries).max() == 0.0


def test_interior_size():
    assert interior_size(64) == 48


@pytest.mark.parametrize("scale", [0.1, 1.0, 5.0])
def test_expm_matches_scipy(scale):
    a = _random(12, 1, scale)
    ref = sla.expm(a)
    np.testing.assert_allclose(expm(a), ref, rtol=1e-12, atol=1e-12 * np.abs(ref).max())
    ext = expm(a, "extended")
    assert ext.dtype == np.clongdouble
    np.testing.assert_allclose(ext.astype(complex), ref, rtol=1e-11, atol=1e-11 * np.abs(ref).max())


def test_expm_rejects_bad_precision_and_overflow():
    with pytest.raises(ValueError):
        expm(np.eye(2), "quad")
    with pytest.raises(MatrixFunctionError), np.errstate(over="ignore"):
        expm(np.diag([1000.0, 0.0]))


def test_expm_nilpotent():
    a = np.triu(_random(6, 2), 1)
    np.testing.assert_allclose(expm_nilpotent(a), sla.expm(a), rtol=1e-13, atol=1e-13)
    with pytest.raises(MatrixFunctionError):
        expm_nilpotent(np.eye(3))


def test_arctan_hermitian_against_eigh():
    a = _random(10, 3)
    h = a + a.conj().T
    lam, v = np.linalg.eigh(h)
    ref = v @ np.diag(np.arctan(lam)) @ v.conj().T
    out, diag = arctan_matrix(h)
    assert diag.method == "eig"
    np.testing.assert_allclose(out, ref, atol=1e-12)
    np.testing.assert_allclose(SchurArctan(h, nodes=200).matrix(), ref, atol=1e-9)


def test_arctan_nonnormal_routes_agree():
    # a Jordan-like block defeats the eigendecomposition; Schur must still work
    a = np.diag(np.full(6, 0.3)) + np.diag(np.full(5, 1.0), 1)
    out, diag = arctan_matrix(a)
    assert diag.method != "eig"
    # arctan(A) satisfies tan(arctan A) = A
    c = sla.cosm(out)
    np.testing.assert_allclose(np.linalg.solve(c, sla.sinm(out)), a, atol=1e-9)


def test_arctan_branch_cut_guard():
    with pytest.raises(MatrixFunctionError):
        SchurArctan(np.diag([2j, 0.0]))
