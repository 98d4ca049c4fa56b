r"""Coherent-state time operator.

The time operator is defined through the Barut-Girardello resolution of
identity,

    T = (4 pi i)^{-1} int d mu(z,k) ln(z / z*) |z,k><z,k|,
    d mu = 2 K_{2k-1}(2|z|) I_{2k-1}(2|z|) d^2 z / pi,

with ``ln(z/z*) = 2 i arg z`` on a chosen branch. Writing ``z = r e^{i theta}``
the integral factorizes and the Fock matrix elements are

    T_nm = A_{n-m} R_{n+m} / (pi^2 sqrt(n! Gamma(2k+n) m! Gamma(2k+m)))

with ``A_q = int theta e^{i q theta} d theta`` over the branch interval and
``R_P = int_0^inf K_{2k-1}(2r) r^{2k+P} dr``.

The operator is *not* built as ``(ln K- - ln K+)/(4 i omega)``: the
truncated ``K-`` is nilpotent, hence singular, and has no logarithm. The
coherent-state integral above is the implementable definition.

Two conventions are kept open:

* branch of ``arg z`` - ``"principal"`` gives a Hermitian, zero-diagonal T;
  ``"positive"`` adds a real diagonal (a function of ``H_CS``) and, for odd
  ``n - m``, an off-diagonal term from the shifted lower half-plane.
* prefactor - ``"as-written"`` uses ``(4 pi i)^{-1}`` literally;
  ``"frequency-scaled"`` adds the ``1/(2 omega)`` that the operator ansatz
  ``(ln K- - ln K+)/(4 i omega)`` carries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as P

from .bg_coherent import (
    CONVENTIONS,
    POSITIVE,
    PRINCIPAL,
    angular_rule,
    bg_state,
    default_quadrature,
    log_fock_norms,
    radial_moments,
    radial_moments_exact,
)
from .operators import OperatorMatrix, commutator
from .report import CheckReport
from .specfun import QuadratureSpec
from .su11_fock import ModelParams, build_generators, fock_basis

AS_WRITTEN = "as-written"
FREQUENCY_SCALED = "frequency-scaled"
PREFACTOR_MODES = (AS_WRITTEN, FREQUENCY_SCALED)

DRIFT_LIMIT = 1e-9


class QuadratureError(RuntimeError):
    """Quadrature too coarse: node doubling moves an entry by more than the limit."""


@dataclass(frozen=True)
class TimeOperatorConfig:
    params: ModelParams = ModelParams()
    N: int = 16
    theta_convention: str = PRINCIPAL
    prefactor_mode: str = AS_WRITTEN
    quad: QuadratureSpec | None = None

    def __post_init__(self):
        if self.theta_convention not in CONVENTIONS:
            raise ValueError(f"unknown branch convention {self.theta_convention!r}")
        if self.prefactor_mode not in PREFACTOR_MODES:
            raise ValueError(f"unknown prefactor mode {self.prefactor_mode!r}")
        if self.N < 16:
            raise ValueError("time operator truncation N must be >= 16")

    def quadrature(self) -> QuadratureSpec:
        return default_quadrature(self.params, self.N) if self.quad is None else self.quad

    @property
    def scale(self) -> float:
        return 1.0 if self.prefactor_mode == AS_WRITTEN else 1.0 / (2.0 * self.params.omega)

    def echo(self) -> dict:
        quad = self.quadrature()
        return {
            **self.params.echo(),
            "N": self.N,
            "branch": self.theta_convention,
            "prefactor": self.prefactor_mode,
            "radial_nodes": quad.radial_count,
            "angular_nodes": quad.angular_count,
            "r_max": quad.r_max,
        }


def angular_factor_exact(q: int, convention: str = PRINCIPAL) -> complex:
    """``int theta e^{i q theta} d theta`` over the branch interval."""
    if convention == PRINCIPAL:
        return 0j if q == 0 else complex(0.0, -2.0 * math.pi * (-1) ** (q % 2) / q)
    if q == 0:
        return complex(2.0 * math.pi**2)
    return complex(0.0, -2.0 * math.pi / q)


def angular_factors_quadrature(max_q: int, count: int, convention: str = PRINCIPAL) -> np.ndarray:
    """Quadrature values of ``A_q`` for ``q = -max_q..max_q``.

    On the principal interval the Gauss-Legendre nodes are symmetric, and the
    sum is folded over ``+-theta``: ``A_q = 2i sum w theta sin(q theta)``. That
    makes ``A_0 = 0`` and ``A_{-q} = -A_q`` hold exactly in floating point.
    """
    th, w = angular_rule(count, convention)
    out = np.empty(2 * max_q + 1, complex)
    if convention == PRINCIPAL:
        half = th > 0.0
        th, w = th[half], w[half]
        for i, q in enumerate(range(-max_q, max_q + 1)):
            out[i] = complex(0.0, 2.0 * math.fsum(w * th * np.sin(q * th)))
    else:
        for i, q in enumerate(range(-max_q, max_q + 1)):
            out[i] = complex(
                math.fsum(w * th * np.cos(q * th)), math.fsum(w * th * np.sin(q * th))
            )
    return out


def _assemble(cfg: TimeOperatorConfig, angular: np.ndarray, radial: np.ndarray) -> OperatorMatrix:
    N = cfg.N
    lognorm = log_fock_norms(cfg.params.k, N)
    out = np.empty((N, N), complex)
    for n in range(N):
        for m in range(N):
            out[n, m] = (
                angular[n - m + N - 1]
                * radial[n + m]
                * (math.exp(-lognorm[n] - lognorm[m]) / math.pi**2)
            )
    return OperatorMatrix(out * cfg.scale, fock_basis(cfg.params), "T")


def _quadrature_entries(cfg: TimeOperatorConfig, quad: QuadratureSpec) -> OperatorMatrix:
    angular = angular_factors_quadrature(cfg.N - 1, quad.angular_count, cfg.theta_convention)
    radial = radial_moments(cfg.params.k, 2 * (cfg.N - 1), quad)
    return _assemble(cfg, angular, radial)


def assemble_T_quadrature(cfg: TimeOperatorConfig, check_resolution: bool = False) -> OperatorMatrix:
    """Time operator by 2-D quadrature over the coherent-state measure.

    With ``check_resolution`` the assembly is repeated with doubled radial and
    angular node counts; :class:`QuadratureError` is raised if any entry moves
    by more than ``1e-9``.
    """
    quad = cfg.quadrature()
    t = _quadrature_entries(cfg, quad)
    if check_resolution:
        drift = quadrature_drift(cfg, t)
        if drift > DRIFT_LIMIT:
            raise QuadratureError(
                f"node doubling moves T by {drift:.3e} (> {DRIFT_LIMIT:.0e}); "
                f"raise radial/angular node counts"
            )
    return t


def quadrature_drift(cfg: TimeOperatorConfig, t: OperatorMatrix | None = None) -> float:
    quad = cfg.quadrature()
    t = _quadrature_entries(cfg, quad) if t is None else t
    fine = _quadrature_entries(cfg, quad.doubled())
    return float(np.abs(fine.entries - t.entries).max())


def assemble_T_closed_form(cfg: TimeOperatorConfig) -> OperatorMatrix:
    """Time operator from the closed-form angular and radial integrals.

    ``R_P = Gamma(2k + P/2) Gamma(P/2 + 1) / 4`` (Mellin transform of
    ``K_nu``) and ``A_q`` from :func:`angular_factor_exact`.
    """
    N = cfg.N
    angular = np.array(
        [angular_factor_exact(q, cfg.theta_convention) for q in range(-(N - 1), N)]
    )
    radial = radial_moments_exact(cfg.params.k, 2 * (N - 1))
    return _assemble(cfg, angular, radial)


def relative_deviation(a: np.ndarray, b: np.ndarray) -> float:
    """Entrywise ``|a - b| / |b|``; entries with ``b == 0`` use the absolute difference."""
    diff = np.abs(a - b)
    scale = np.abs(b)
    rel = np.where(scale > 0.0, diff / np.where(scale > 0.0, scale, 1.0), diff)
    return float(rel.max())


def compare_assemblies(cfg: TimeOperatorConfig, block: int = 12) -> CheckReport:
    """Quadrature vs closed form on the leading block, plus structural checks."""
    tq = assemble_T_quadrature(cfg)
    tc = assemble_T_closed_form(cfg)
    rep = CheckReport(f"time_operator[{cfg.theta_convention}]", cfg.echo())
    rep.check(
        f"quadrature vs closed form, relative, top {block}x{block}",
        relative_deviation(tq.entries[:block, :block], tc.entries[:block, :block]),
        1e-8,
    )
    rep.check("node-doubling drift", quadrature_drift(cfg, tq), DRIFT_LIMIT)
    if cfg.theta_convention == PRINCIPAL:
        rep.check("hermiticity defect (quadrature)", tq.hermiticity_defect(), 1e-12)
        rep.check("max |diag T| (quadrature)", float(np.abs(np.diag(tq.entries)).max()), 0.0)
    gen = build_generators(cfg.params, cfg.N)
    c = commutator(gen.H_CS, tq).entries
    rep.check("max |diag [H_CS, T]|", float(np.abs(np.diag(c)).max()), 0.0)
    return rep


def branch_difference(params: ModelParams, N: int = 16) -> CheckReport:
    """``T(positive) - T(principal)`` against the difference of the angular integrals.

    ``A_q`` changes by ``2 pi^2`` at ``q = 0`` and by ``-4 pi i / q`` at odd
    ``q``; even ``q != 0`` is unchanged. The shift is therefore a real
    diagonal ``2 R_{2n} / (n! Gamma(2k+n))`` plus an odd-``q`` off-diagonal
    part, which is recorded rather than assumed absent.
    """
    cfg_p = TimeOperatorConfig(params, N, PRINCIPAL)
    cfg_q = TimeOperatorConfig(params, N, POSITIVE)
    tp = assemble_T_quadrature(cfg_p).entries
    tq = assemble_T_quadrature(cfg_q).entries
    diff = tq - tp
    angular = np.array(
        [angular_factor_exact(q, POSITIVE) - angular_factor_exact(q, PRINCIPAL) for q in range(-(N - 1), N)]
    )
    predicted = _assemble(cfg_q, angular, radial_moments_exact(params.k, 2 * (N - 1))).entries
    rep = CheckReport("branch_difference", {**params.echo(), "N": N})
    rep.check("difference vs angular prediction (relative)", relative_deviation(diff, predicted), 1e-8)
    rep.check("max |imag diagonal difference|", float(np.abs(np.diag(diff).imag).max()), 1e-10)
    n = np.arange(N)
    even_q = (n[:, None] - n[None, :]) % 2 == 0
    off = diff - np.diag(np.diag(diff))
    rep.check("max |even-q off-diagonal difference|", float(np.abs(off[even_q]).max()), 1e-10)
    rep.info("max |odd-q off-diagonal difference|", float(np.abs(off[~even_q]).max()))
    lognorm = log_fock_norms(params.k, N)
    radial = radial_moments_exact(params.k, 2 * (N - 1))
    diag_pred = np.array([2.0 * radial[2 * i] * math.exp(-2.0 * lognorm[i]) for i in range(N)])
    rep.check(
        "diagonal vs 2 R_2n / norm (relative)",
        relative_deviation(np.diag(diff).real, diag_pred),
        1e-8,
    )
    rep.convergence["diagonal difference"] = [(i, float(d)) for i, d in enumerate(np.diag(diff).real)]
    return rep


def commutator_structure(t: OperatorMatrix, params: ModelParams) -> CheckReport:
    """``C = [H_CS, T]`` in the energy basis.

    Because ``H_CS`` is diagonal, ``C_nm = 2 omega (n - m) T_nm``: the diagonal
    vanishes identically and ``C - i`` can never be zero there. The per-entry
    defect ``|C - i I|`` is archived, not asserted small.
    """
    gen = build_generators(params, t.dim)
    c = commutator(gen.H_CS, t).entries
    n = np.arange(t.dim)
    rebuilt = 2.0 * params.omega * (n[:, None] - n[None, :]) * t.entries
    rep = CheckReport("commutator_structure", {**params.echo(), "N": t.dim})
    rep.check("max |diag [H_CS, T]|", float(np.abs(np.diag(c)).max()), 0.0)
    rep.check("max |C - 2 omega (n-m) T|", float(np.abs(c - rebuilt).max()), 1e-13)
    defect = np.abs(c - 1j * np.eye(t.dim))
    rep.info("min diagonal |C_nn - i|", float(np.diag(defect).min()))
    rep.info("max off-diagonal |C_nm|", float(np.abs(c - np.diag(np.diag(c))).max()))
    rep.convergence["diagonal canonical defect"] = [
        (i, float(d)) for i, d in enumerate(np.diag(defect))
    ]
    return rep


def gauge_shift(t: OperatorMatrix, phi_coeffs, params: ModelParams) -> OperatorMatrix:
    """``T + phi(H_CS)`` for the polynomial ``phi(x) = sum_j c_j x^j``.

    Raises ``AssertionError`` if the shift changes ``[H_CS, T]`` at all.
    """
    gen = build_generators(params, t.dim)
    h = np.diag(gen.H_CS.entries).real
    shift = P.polyval(h, np.asarray(phi_coeffs, float)) if len(phi_coeffs) else np.zeros_like(h)
    shifted = OperatorMatrix(t.entries + np.diag(shift), t.basis, "T'")
    before = commutator(gen.H_CS, t).entries
    after = commutator(gen.H_CS, shifted).entries
    if not np.array_equal(before, after):
        raise AssertionError("gauge shift changed [H_CS, T]")
    return shifted


def gauge_report(t: OperatorMatrix, params: ModelParams, max_degree: int = 6, seed: int = 0) -> CheckReport:
    """Random polynomial shifts ``phi(H_CS)`` of degree ``0..max_degree``.

    Each row is the largest entry of ``[H_CS, T + phi] - [H_CS, T]``; the
    tolerance is zero.
    """
    rng = np.random.default_rng(seed)
    gen = build_generators(params, t.dim)
    before = commutator(gen.H_CS, t).entries
    rep = CheckReport("gauge_shift", {**params.echo(), "N": t.dim, "max_degree": max_degree, "seed": seed})
    for deg in range(max_degree + 1):
        coeffs = rng.standard_normal(deg + 1)
        try:
            shifted = gauge_shift(t, coeffs, params)
            dev = float(np.abs(commutator(gen.H_CS, shifted).entries - before).max())
        except AssertionError:
            dev = math.inf
        rep.check(f"degree {deg}: max |[H_CS, T + phi] - [H_CS, T]|", dev, 0.0)
    return rep


def uncertainty_report(z: complex, t: OperatorMatrix, params: ModelParams) -> CheckReport:
    """``Delta H_CS`` and ``Delta T`` in ``|z,k>``; values are recorded, not bounded.

    ``Delta H_CS`` is computed twice: from matrix moments and from the
    coefficient series ``sum (2 omega (n+k))^p |c_n|^2``.
    """
    state = bg_state(z, params, t.dim, auto_enlarge=False, tail_target=1e-10)
    v = state.coeffs / np.linalg.norm(state.coeffs)
    gen = build_generators(params, t.dim)
    h = gen.H_CS.entries
    mean_h = float(np.real(v.conj() @ h @ v))
    var_h = float(np.real(v.conj() @ h @ h @ v)) - mean_h**2
    e = 2.0 * params.omega * (np.arange(t.dim) + params.k)
    prob = np.abs(v) ** 2
    mean_s = math.fsum(e * prob)
    var_s = math.fsum(e**2 * prob) - mean_s**2
    tm = t.entries
    mean_t = complex(v.conj() @ tm @ v)
    var_t = float(np.real(v.conj() @ tm @ tm @ v)) - abs(mean_t) ** 2
    d_h = math.sqrt(max(var_s, 0.0))
    d_t = math.sqrt(max(var_t, 0.0))
    rep = CheckReport("uncertainty", {**params.echo(), "z": complex(z), "N": t.dim})
    rep.check("|var_H(matrix) - var_H(series)|", abs(var_h - var_s), 1e-10 * max(1.0, var_s))
    rep.info("Delta H_CS", d_h)
    rep.info("Delta T", d_t)
    rep.info("<T>", mean_t)
    rep.info("Delta H_CS * Delta T", d_h * d_t)
    return rep
