"""Operator carrier and dense matrix functions.

:class:`OperatorMatrix` tags a dense complex matrix with the basis it lives
in, so that products and commutators between a Fock-space matrix and a grid
matrix (or two Fock matrices of different ``k``) fail loudly instead of
silently producing garbage.

Matrix functions:

* :func:`expm` - scaling-and-squaring exponential. Double precision goes
  through :func:`scipy.linalg.expm`; extended precision (``np.longdouble``)
  uses a Taylor scaling-and-squaring written here, because LAPACK has no
  80-bit path.
* :func:`expm_nilpotent` - exact finite power series for nilpotent
  arguments (truncated ladder operators).
* :func:`arctan_matrix` - ``arctan`` of a non-normal matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

__all__ = [
    "Basis",
    "BasisMismatch",
    "MatrixFunctionError",
    "OperatorMatrix",
    "commutator",
    "expm",
    "expm_nilpotent",
    "arctan_matrix",
    "interior_size",
]


class BasisMismatch(ValueError):
    """Binary operation between operators in different bases."""


class MatrixFunctionError(ArithmeticError):
    """A matrix function could not be evaluated reliably."""


@dataclass(frozen=True)
class Basis:
    """Basis tag: ``kind`` is ``"fock"``, ``"position"`` or ``"momentum"``.

    ``label`` pins the representation: the Bargmann index for Fock bases, a
    grid descriptor tuple for grids.
    """

    kind: str
    label: tuple = ()

    def __str__(self) -> str:
        if self.kind == "fock" and self.label:
            return f"fock(k={self.label[0]!r})"
        return f"{self.kind}{self.label!r}" if self.label else self.kind


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """Dense complex square matrix tagged with its basis."""

    entries: np.ndarray
    basis: Basis
    name: str = field(default="", compare=False)

    def __post_init__(self):
        a = np.asarray(self.entries)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"operator must be square, got shape {a.shape}")
        if not np.iscomplexobj(a) or a.dtype != np.complex128:
            a = a.astype(np.complex128)
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def _check(self, other: "OperatorMatrix") -> None:
        if not isinstance(other, OperatorMatrix):
            raise TypeError(f"expected OperatorMatrix, got {type(other).__name__}")
        if self.basis != other.basis or self.dim != other.dim:
            raise BasisMismatch(
                f"{self.name or 'operator'} [{self.basis}, dim={self.dim}] vs "
                f"{other.name or 'operator'} [{other.basis}, dim={other.dim}]"
            )

    def _new(self, entries, name="") -> "OperatorMatrix":
        return OperatorMatrix(entries, self.basis, name)

    def __matmul__(self, other):
        if isinstance(other, OperatorMatrix):
            self._check(other)
            return self._new(self.entries @ other.entries)
        return self.entries @ other

    def __add__(self, other):
        self._check(other)
        return self._new(self.entries + other.entries)

    def __sub__(self, other):
        self._check(other)
        return self._new(self.entries - other.entries)

    def __mul__(self, scalar):
        if isinstance(scalar, OperatorMatrix):
            raise TypeError("use @ for operator products")
        return self._new(self.entries * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self._new(self.entries / scalar)

    def __neg__(self):
        return self._new(-self.entries)

    @property
    def H(self) -> "OperatorMatrix":
        """Conjugate transpose."""
        return self._new(self.entries.conj().T)

    def identity(self) -> "OperatorMatrix":
        return self._new(np.eye(self.dim))

    def hermiticity_defect(self, interior: int | None = None) -> float:
        """``max |A - A^dagger|`` over the leading ``interior`` block (all if None)."""
        a = self.entries if interior is None else self.entries[:interior, :interior]
        return float(np.abs(a - a.conj().T).max())

    def is_hermitian(self, tol: float = 1e-12, interior: int | None = None) -> bool:
        return self.hermiticity_defect(interior) <= tol


def commutator(a: OperatorMatrix, b: OperatorMatrix) -> OperatorMatrix:
    """``[A, B] = AB - BA``."""
    a._check(b)
    return a._new(a.entries @ b.entries - b.entries @ a.entries)


def interior_size(n: int) -> int:
    """Leading block size that excludes the last ``ceil(n/4)`` rows/columns."""
    return n - math.ceil(n / 4)


# ---------------------------------------------------------------------------
# exponentials
# ---------------------------------------------------------------------------


def _taylor_expm(a: np.ndarray, max_squarings: int = 64) -> np.ndarray:
    # theta = 1/4 keeps the Taylor tail below eps well before 40 terms
    eps = np.finfo(a.dtype).eps
    norm = float(np.abs(a).sum(axis=0).max())
    s = 0 if norm <= 0.25 else int(math.ceil(math.log2(norm / 0.25)))
    if s > max_squarings:
        raise MatrixFunctionError(
            f"expm: norm {norm:.3g} needs {s} squarings (> {max_squarings})"
        )
    b = a / a.dtype.type(2**s)
    eye = np.eye(a.shape[0], dtype=a.dtype)
    result = eye.copy()
    term = eye.copy()
    for j in range(1, 60):
        term = term @ b / a.dtype.type(j)
        result = result + term
        if np.abs(term).max() <= eps * np.abs(result).max():
            break
    else:
        raise MatrixFunctionError("expm: Taylor series failed to converge")
    for _ in range(s):
        result = result @ result
    return result


def expm(a, precision: str = "double") -> np.ndarray:
    """Dense matrix exponential by scaling and squaring.

    Parameters
    ----------
    a : array_like or OperatorMatrix
        Square matrix.
    precision : {"double", "extended"}
        ``"extended"`` runs the Taylor scaling-and-squaring in
        ``np.longdouble`` (real input) or ``np.clongdouble`` and returns the
        extended-precision array.

    Raises
    ------
    MatrixFunctionError
        If the result is not finite or the step count is exceeded.
    """
    arr = a.entries if isinstance(a, OperatorMatrix) else np.asarray(a)
    if precision == "double":
        out = sla.expm(arr)
    elif precision == "extended":
        dtype = np.clongdouble if np.iscomplexobj(arr) else np.longdouble
        out = _taylor_expm(np.asarray(arr, dtype=dtype))
    else:
        raise ValueError(f"unknown precision {precision!r}")
    if not np.all(np.isfinite(out)):
        raise MatrixFunctionError("expm: result overflowed")
    return out


def expm_nilpotent(a, max_terms: int | None = None) -> np.ndarray:
    """``exp(A)`` for nilpotent ``A`` as the terminating series ``sum A^n/n!``.

    Raises ``MatrixFunctionError`` if ``A^n`` has not vanished after
    ``dim`` terms (i.e. ``A`` is not nilpotent).
    """
    arr = a.entries if isinstance(a, OperatorMatrix) else np.asarray(a)
    n = arr.shape[0]
    limit = n + 1 if max_terms is None else max_terms
    result = np.eye(n, dtype=np.result_type(arr, float))
    term = result.copy()
    for j in range(1, limit + 1):
        term = term @ arr / j
        if not np.any(term):
            return result
        result = result + term
    raise MatrixFunctionError("expm_nilpotent: argument is not nilpotent")


# ---------------------------------------------------------------------------
# arctan of a non-normal matrix
# ---------------------------------------------------------------------------


@dataclass
class ArctanDiagnostics:
    method: str
    eigvec_condition: float
    spectral_radius: float
    min_branch_distance: float
    nodes: int = 0


def _arctan_resolvent(r: np.ndarray, rhs: np.ndarray, nodes: int) -> np.ndarray:
    # arctan(R) X = int_0^1 [(I - isR)^-1 - (I + isR)^-1] X / (2is) ds, R triangular
    x, w = np.polynomial.legendre.leggauss(nodes)
    s = 0.5 * (x + 1.0)
    w = 0.5 * w
    n = r.shape[0]
    diag = np.arange(n)
    shifted = np.empty_like(r, dtype=complex)
    acc = np.zeros(rhs.shape, dtype=complex)
    for si, wi in zip(s, w):
        np.multiply(r, -1j * si, out=shifted)
        shifted[diag, diag] += 1.0
        minus = sla.solve_triangular(shifted, rhs, check_finite=False)
        np.multiply(r, 1j * si, out=shifted)
        shifted[diag, diag] += 1.0
        plus = sla.solve_triangular(shifted, rhs, check_finite=False)
        acc += (wi / (2j * si)) * (minus - plus)
    return acc


class SchurArctan:
    """``arctan(A)`` applied through the complex Schur form of ``A``.

    Uses ``arctan(A) = int_0^1 A (I + s^2 A^2)^{-1} ds``, valid when no
    eigenvalue of ``A`` lies on the branch cuts ``{i t, |t| >= 1}``. Each
    quadrature node costs two triangular solves, so applying the function
    to a handful of vectors is cheap even when the full matrix is not.
    """

    def __init__(self, a: np.ndarray, nodes: int = 80):
        self.r, self.z = sla.schur(np.asarray(a, dtype=complex), output="complex")
        self.nodes = nodes
        lam = np.diag(self.r)
        on_axis = np.abs(lam.imag) >= 1.0
        self.min_branch_distance = (
            float(np.abs(lam.real[on_axis]).min()) if np.any(on_axis) else math.inf
        )
        if self.min_branch_distance < 1e-10:
            raise MatrixFunctionError(
                "arctan: eigenvalue on the branch cut i*[1, inf) "
                f"(distance {self.min_branch_distance:.2e})"
            )
        self.spectral_radius = float(np.abs(lam).max())

    def apply(self, v: np.ndarray) -> np.ndarray:
        """``arctan(A) v``; ``v`` may be a vector or a block of columns."""
        u = self.z.conj().T @ v
        return self.z @ _arctan_resolvent(self.r, u, self.nodes)

    def matrix(self) -> np.ndarray:
        return self.apply(np.eye(self.r.shape[0]))


def arctan_matrix(
    a: np.ndarray,
    cond_limit: float = 1e8,
    taylor_radius: float = 0.9,
    nodes: int = 80,
) -> tuple[np.ndarray, ArctanDiagnostics]:
    """Principal ``arctan`` of a (possibly non-normal) square matrix.

    Strategy, in order:

    1. eigendecomposition ``A = V diag(lam) V^-1`` when ``cond(V) <= cond_limit``;
    2. Taylor series when the spectral radius is below ``taylor_radius``;
    3. Schur form plus Gauss-Legendre quadrature of the resolvent integral.

    Returns the matrix and an :class:`ArctanDiagnostics` record.
    """
    a = np.asarray(a, dtype=complex)
    lam, v = np.linalg.eig(a)
    cond = float(np.linalg.cond(v))
    rho = float(np.abs(lam).max())
    on_axis = np.abs(lam.imag) >= 1.0
    dist = float(np.abs(lam.real[on_axis]).min()) if np.any(on_axis) else math.inf
    if cond <= cond_limit and dist > 1e-10:
        out = v @ np.diag(np.arctan(lam)) @ np.linalg.inv(v)
        return out, ArctanDiagnostics("eig", cond, rho, dist)
    if rho < taylor_radius:
        out = np.zeros_like(a)
        power = a.copy()
        a2 = a @ a
        for j in range(2000):
            term = power / (2 * j + 1) * (-1) ** j
            out += term
            if np.abs(term).max() <= 1e-17 * max(np.abs(out).max(), 1e-300):
                break
            power = power @ a2
        return out, ArctanDiagnostics("taylor", cond, rho, dist)
    try:
        sa = SchurArctan(a, nodes=nodes)
    except MatrixFunctionError as exc:
        raise MatrixFunctionError(
            f"arctan: eigenvector condition {cond:.2e} too large, spectral radius "
            f"{rho:.3g} too large for Taylor, and {exc}"
        ) from exc
    return sa.matrix(), ArctanDiagnostics("schur-quadrature", cond, rho, dist, nodes)
