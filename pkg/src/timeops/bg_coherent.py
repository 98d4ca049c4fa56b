r"""Barut-Girardello coherent states of su(1,1).

``|z,k>`` is the eigenvector of ``K-`` with eigenvalue ``z``:

    |z,k> = z^{k-1/2} / sqrt(I_{2k-1}(2|z|)) * sum_n z^n / sqrt(n! Gamma(2k+n)) |n,k>

The prefactor ``z^{k-1/2}`` is multivalued for non-integer ``k``; the branch
of ``arg z`` is stored with each state (``"principal"``: ``(-pi, pi]``,
``"positive"``: ``[0, 2 pi)``). Projectors ``|z><z|`` do not depend on it.

``z = 0`` is the Fock vacuum (the limit of the coefficient series; the
formula itself is 0/0 there).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .operators import expm_nilpotent
from .report import CheckReport
from .specfun import (
    QuadratureSpec,
    decay_cutoff,
    gauss_legendre,
    ln_gamma,
    log_bessel_I,
    log_bessel_K,
    radial_quadrature,
)
from .su11_fock import ModelParams, build_generators, canonical_partner

PRINCIPAL = "principal"
POSITIVE = "positive"
CONVENTIONS = (PRINCIPAL, POSITIVE)

TAIL_TARGET = 1e-12
MAX_TRUNCATION = 4096


class TruncationError(RuntimeError):
    """The requested truncation cannot hold the state to the tail target."""


def branch_angle(z: complex, convention: str = PRINCIPAL) -> float:
    """``arg z`` in ``(-pi, pi]`` or ``[0, 2 pi)``."""
    if convention not in CONVENTIONS:
        raise ValueError(f"unknown branch convention {convention!r}")
    theta = math.atan2(z.imag, z.real)
    if convention == PRINCIPAL:
        # atan2 already returns (-pi, pi]; map -pi (from -0.0 imag) to pi
        return math.pi if theta == -math.pi else theta
    return theta + 2.0 * math.pi if theta < 0.0 else theta


def branch_interval(convention: str) -> tuple[float, float]:
    return (-math.pi, math.pi) if convention == PRINCIPAL else (0.0, 2.0 * math.pi)


def log_norm_factor(r: float, k: float) -> float:
    """``log( r^{k-1/2} / sqrt(I_{2k-1}(2r)) )``, with the ``r -> 0`` limit."""
    if r == 0.0:
        return 0.5 * ln_gamma(2.0 * k)
    return (k - 0.5) * math.log(r) - 0.5 * log_bessel_I(2.0 * k - 1.0, 2.0 * r)


def log_fock_norms(k: float, N: int) -> np.ndarray:
    """``log sqrt(n! Gamma(2k+n))`` for ``n = 0..N-1``."""
    return np.array([0.5 * (math.lgamma(n + 1.0) + ln_gamma(2.0 * k + n)) for n in range(N)])


def _log_abs_coeff(r: float, k: float, n: int) -> float:
    return (
        log_norm_factor(r, k)
        + n * math.log(r)
        - 0.5 * (math.lgamma(n + 1.0) + ln_gamma(2.0 * k + n))
    )


def tail_weight(r: float, k: float, N: int) -> float:
    """``sum_{n >= N} |<n|z>|^2`` - the squared norm lost to truncation."""
    if r == 0.0:
        return 0.0
    terms = []
    n = N
    while True:
        t = math.exp(2.0 * _log_abs_coeff(r, k, n))
        terms.append(t)
        # terms decrease monotonically once n > r
        if n > r and (t == 0.0 or t < 1e-18 * max(math.fsum(terms), 1e-300)):
            break
        n += 1
    return math.fsum(terms)


@dataclass(frozen=True)
class CoherentVector:
    """Truncated coefficient vector of ``|z,k>`` in the Fock basis."""

    z: complex
    k: float
    N: int
    coeffs: np.ndarray
    theta_convention: str = PRINCIPAL
    tail: float = 0.0

    @property
    def eigen_bound(self) -> float:
        """Analytic bound on ``||K- v - z v||``: ``|z| sqrt(sum_{n>=N-1} |c_n|^2)``."""
        r = abs(self.z)
        if r == 0.0:
            return 0.0
        last = math.exp(2.0 * _log_abs_coeff(r, self.k, self.N - 1))
        return r * math.sqrt(self.tail + last)

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))


def auto_truncation(z: complex) -> int:
    return max(32, math.ceil(4.0 * abs(z) + 20.0))


def bg_state(
    z: complex,
    params: ModelParams,
    N: int | None = None,
    convention: str = PRINCIPAL,
    auto_enlarge: bool = True,
    tail_target: float = TAIL_TARGET,
) -> CoherentVector:
    """Coefficients of ``|z,k>`` on ``|0..N-1, k>``.

    ``N`` defaults to ``max(32, ceil(4|z| + 20))``. If the truncated norm
    remainder exceeds ``tail_target`` the truncation is doubled (up to
    ``MAX_TRUNCATION``) when ``auto_enlarge`` is set, otherwise
    :class:`TruncationError` is raised.
    """
    z = complex(z)
    k = params.k
    N = auto_truncation(z) if N is None else int(N)
    r = abs(z)
    if r == 0.0:
        vac = np.zeros(N, complex)
        vac[0] = 1.0
        return CoherentVector(0j, k, N, vac, convention, 0.0)

    tail = tail_weight(r, k, N)
    while tail > tail_target:
        if not auto_enlarge or 2 * N > MAX_TRUNCATION:
            raise TruncationError(
                f"|z|={r:.4g}: truncation N={N} leaves norm tail {tail:.3e} > {tail_target:.0e}"
            )
        N *= 2
        tail = tail_weight(r, k, N)

    theta = branch_angle(z, convention)
    n = np.arange(N)
    log_mag = log_norm_factor(r, k) + n * math.log(r) - log_fock_norms(k, N)
    phase = (k - 0.5) * theta + n * theta
    coeffs = np.exp(log_mag) * np.exp(1j * phase)
    return CoherentVector(z, k, N, coeffs, convention, tail)


def bg_state_exponential(
    z: complex, params: ModelParams, N: int | None = None, convention: str = PRINCIPAL
) -> CoherentVector:
    """``|z,k> = exp(z K+ (K3+k)^-1) |0,k>``, normalized.

    ``K+ (K3+k)^-1`` is nilpotent under truncation, so the exponential is the
    terminating power series. The branch phase ``e^{i(k-1/2) arg z}`` is
    applied so the result is comparable entrywise with :func:`bg_state`.
    """
    z = complex(z)
    N = auto_truncation(z) if N is None else int(N)
    if z == 0:
        return bg_state(0j, params, N, convention)
    a = z * canonical_partner(params, N).entries
    col = expm_nilpotent(a)[:, 0]
    col = col / np.linalg.norm(col)
    theta = branch_angle(z, convention)
    col = col * np.exp(1j * (params.k - 0.5) * theta)
    return CoherentVector(z, params.k, N, col, convention, tail_weight(abs(z), params.k, N))


def eigen_residual(state: CoherentVector, params: ModelParams) -> float:
    """``||K- v - z v||`` with the truncated ``K-``."""
    km = build_generators(params, state.N).Kminus.entries
    return float(np.linalg.norm(km @ state.coeffs - state.z * state.coeffs))


def _scaled_series(w: complex, k: float, shift: float) -> complex:
    # sum_n w^n / (n! Gamma(2k+n)) * exp(-shift), summed in compensated form
    if w == 0:
        return complex(math.exp(-ln_gamma(2.0 * k) - shift))
    lw = math.log(abs(w))
    phi = math.atan2(w.imag, w.real)
    re, im = [], []
    peak = -math.inf
    n = 0
    while True:
        lt = n * lw - math.lgamma(n + 1.0) - ln_gamma(2.0 * k + n) - shift
        peak = max(peak, lt)
        t = math.exp(lt)
        re.append(t * math.cos(n * phi))
        im.append(t * math.sin(n * phi))
        if n > abs(w) ** 0.5 and lt < peak - 40.0:
            break
        n += 1
    return complex(math.fsum(re), math.fsum(im))


def overlap(
    z1: complex, z2: complex, params: ModelParams, convention: str = PRINCIPAL
) -> complex:
    """``<z1,k|z2,k>`` from the Bessel closed form.

    ``I_{2k-1}(2 sqrt(z1* z2))`` is expanded as ``(z1* z2)^{k-1/2}`` times an
    entire power series in ``z1* z2``; the multivalued factor is combined with
    the state prefactors under ``convention``, which leaves only single-valued
    pieces and avoids any complex-argument Bessel evaluation.
    """
    z1, z2 = complex(z1), complex(z2)
    r1, r2 = abs(z1), abs(z2)
    if max(r1, r2) > 50.0:
        raise ValueError("overlap: |z| > 50 is outside the series budget")
    k = params.k
    w = z1.conjugate() * z2
    log_pref = log_norm_factor(r1, k) + log_norm_factor(r2, k)
    # exp(-(r1 + r2)) keeps the series terms below ~1 for any phase of w
    shift = r1 + r2
    series = _scaled_series(w, k, shift)
    th1 = branch_angle(z1, convention) if r1 else 0.0
    th2 = branch_angle(z2, convention) if r2 else 0.0
    phase = (k - 0.5) * (th2 - th1)
    return series * math.exp(log_pref + shift) * complex(math.cos(phase), math.sin(phase))


COHERENT_LABELS = (0.5, 1.0 + 1.0j, -2.0 + 0.3j, 3.0j, -3.0, 2.1 - 2.1j)
OVERLAP_PAIRS = ((1.0, -1.0), (0.3 + 2.0j, -1.5 - 0.5j), (2.0, 2.0), (-3.0, 2.1 - 2.1j))


def verify_coherent_states(
    params: ModelParams, labels=COHERENT_LABELS, pairs=OVERLAP_PAIRS
) -> CheckReport:
    """Eigen-residuals, two constructions, overlaps and branch invariance."""
    rep = CheckReport(
        "coherent_states",
        {**params.echo(), "labels": [complex(z) for z in labels], "pairs": [[complex(a), complex(b)] for a, b in pairs]},
    )
    worst_eig = worst_cons = worst_proj = 0.0
    for z in labels:
        st = bg_state(z, params)
        worst_eig = max(worst_eig, eigen_residual(st, params))
        ex = bg_state_exponential(z, params, st.N)
        worst_cons = max(worst_cons, float(np.abs(st.coeffs - ex.coeffs).max()))
        alt = bg_state(z, params, st.N, POSITIVE).coeffs
        proj = np.outer(st.coeffs, st.coeffs.conj()) - np.outer(alt, alt.conj())
        worst_proj = max(worst_proj, float(np.abs(proj).max()))
    rep.check("max ||K- v - z v|| (auto N)", worst_eig, 1e-10)
    rep.check("max |series - exponential| entrywise", worst_cons, 1e-12)
    rep.check("max |projector(principal) - projector(positive)|", worst_proj, 1e-12)

    worst_ov = 0.0
    for z1, z2 in pairs:
        n = max(auto_truncation(z1), auto_truncation(z2))
        direct = np.vdot(bg_state(z1, params, n).coeffs, bg_state(z2, params, n).coeffs)
        worst_ov = max(worst_ov, abs(overlap(z1, z2, params) - direct) / abs(direct))
    rep.check("max overlap closed form vs inner product (relative)", worst_ov, 1e-10)

    N = 16
    gen = build_generators(params, N)
    for op, mat in (("Kplus", gen.Kplus), ("Kminus", gen.Kminus), ("K3", gen.K3)):
        ref = mat.entries.copy()
        if op == "Kplus":
            ref[:, -1] = 0.0
        dev = float(np.abs(analytic_matrix(op, params.k, N) - ref).max() / np.abs(ref).max())
        rep.check(f"analytic realization of {op} (relative)", dev, 1e-12)
    return rep


# ---------------------------------------------------------------------------
# analytic (Bargmann-type) representation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AnalyticPoly:
    """Polynomial ``f(z) = sum_n coeffs[n] z^n`` of degree ``< N``.

    The Fock state ``|n,k>`` corresponds to ``z^n / sqrt(n! Gamma(2k+n))``;
    the overall ``sqrt(I) z^{1/2-k}`` factor is stripped.
    """

    coeffs: np.ndarray
    k: float

    @property
    def N(self) -> int:
        return len(self.coeffs)


class DegreeOverflow(ValueError):
    pass


def analytic_apply(op: str, f: AnalyticPoly) -> AnalyticPoly:
    """Apply ``K+ = z``, ``K- = 2k d/dz + z d^2/dz^2`` or ``K3 = k + z d/dz``."""
    c = np.asarray(f.coeffs, complex)
    n = np.arange(len(c), dtype=float)
    out = np.zeros_like(c)
    if op == "Kplus":
        if c[-1] != 0:
            raise DegreeOverflow("K+ raises the degree beyond N-1")
        out[1:] = c[:-1]
    elif op == "Kminus":
        # z^n -> n (n - 1 + 2k) z^{n-1}
        out[:-1] = (n[1:] * (n[1:] - 1.0 + 2.0 * f.k)) * c[1:]
    elif op == "K3":
        out = (f.k + n) * c
    else:
        raise ValueError(f"unknown operator {op!r}")
    return AnalyticPoly(out, f.k)


def to_analytic(vec: np.ndarray, k: float) -> AnalyticPoly:
    """Fock coefficients -> monomial coefficients."""
    v = np.asarray(vec, complex)
    return AnalyticPoly(v * np.exp(-log_fock_norms(k, len(v))), k)


def from_analytic(f: AnalyticPoly) -> np.ndarray:
    return f.coeffs * np.exp(log_fock_norms(f.k, f.N))


def analytic_matrix(op: str, k: float, N: int) -> np.ndarray:
    """Fock-basis matrix of ``op`` obtained through the analytic realization.

    Column ``n`` is the image of ``z^n / sqrt(n! Gamma(2k+n))``; for ``K+`` the
    last column is left empty (degree overflow).
    """
    out = np.zeros((N, N), complex)
    for n in range(N):
        e = np.zeros(N, complex)
        e[n] = 1.0
        try:
            out[:, n] = from_analytic(analytic_apply(op, to_analytic(e, k)))
        except DegreeOverflow:
            pass
    return out


# ---------------------------------------------------------------------------
# measure and resolution of identity
# ---------------------------------------------------------------------------


def default_quadrature(
    params: ModelParams, N: int, radial_nodes: int = 200, angular_count: int = 256
) -> QuadratureSpec:
    """Radial rule on ``[0, r_max]`` sized for matrix entries up to ``n, m < N``."""
    k = params.k
    r_max = decay_cutoff(2.0 * k - 1.0, 2.0 * k + 2.0 * (N - 1))
    return radial_quadrature(r_max, radial_nodes, angular_count)


def radial_moments(k: float, max_power: int, quad: QuadratureSpec) -> np.ndarray:
    """``R_P = int_0^inf K_{2k-1}(2r) r^{2k+P} dr`` for ``P = 0..max_power`` by quadrature.

    Node contributions are accumulated with :func:`math.fsum`, so the result
    does not depend on summation order.
    """
    nu = 2.0 * k - 1.0
    r = quad.radial_nodes
    logk = np.array([log_bessel_K(nu, 2.0 * x) for x in r])
    logw = np.log(quad.radial_weights)
    logr = np.log(r)
    out = np.empty(max_power + 1)
    for p in range(max_power + 1):
        out[p] = math.fsum(np.exp(logw + logk + (2.0 * k + p) * logr))
    return out


def radial_moments_exact(k: float, max_power: int) -> np.ndarray:
    """Closed form ``R_P = Gamma(2k + P/2) Gamma(P/2 + 1) / 4``."""
    return np.array(
        [
            0.25 * math.exp(ln_gamma(2.0 * k + 0.5 * p) + math.lgamma(0.5 * p + 1.0))
            for p in range(max_power + 1)
        ]
    )


def angular_rule(count: int, convention: str = PRINCIPAL) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes/weights over the branch interval of ``arg z``."""
    a, b = branch_interval(convention)
    return gauss_legendre(count, a, b)


def angular_moments(max_q: int, count: int, convention: str = PRINCIPAL) -> np.ndarray:
    """``int e^{i q theta} d theta`` over the branch interval, ``q = -max_q..max_q``."""
    th, w = angular_rule(count, convention)
    out = np.empty(2 * max_q + 1, complex)
    for i, q in enumerate(range(-max_q, max_q + 1)):
        out[i] = complex(math.fsum(w * np.cos(q * th)), math.fsum(w * np.sin(q * th)))
    return out


def identity_block(params: ModelParams, N_check: int, quad: QuadratureSpec) -> np.ndarray:
    """``int d mu(z,k) |z,k><z,k|`` on the leading ``N_check`` block by quadrature.

    The ``I_{2k-1}`` of the measure cancels the squared state normalization, so
    entry ``(n, m)`` is
    ``(2/pi) R_{n+m} A_{n-m} / sqrt(n! Gamma(2k+n) m! Gamma(2k+m))``.
    """
    k = params.k
    rad = radial_moments(k, 2 * (N_check - 1), quad)
    ang = angular_moments(N_check - 1, quad.angular_count)
    lognorm = log_fock_norms(k, N_check)
    out = np.empty((N_check, N_check), complex)
    for n in range(N_check):
        for m in range(N_check):
            out[n, m] = (
                (2.0 / math.pi)
                * rad[n + m]
                * ang[n - m + N_check - 1]
                * math.exp(-lognorm[n] - lognorm[m])
            )
    return out


def resolution_of_identity(
    params: ModelParams, N_check: int = 12, quad: QuadratureSpec | None = None
) -> CheckReport:
    """Check ``int d mu |z><z| = 1`` on the leading block, with node doubling."""
    if N_check > 16:
        raise ValueError("N_check must be <= 16")
    quad = default_quadrature(params, N_check) if quad is None else quad
    if quad.radial_count < 200 or quad.angular_count < 256:
        raise ValueError("resolution_of_identity needs >= 200 radial and >= 256 angular nodes")
    block = identity_block(params, N_check, quad)
    fine = identity_block(params, N_check, quad.doubled())
    eye = np.eye(N_check)
    rep = CheckReport(
        "resolution_of_identity",
        {
            **params.echo(),
            "N_check": N_check,
            "radial_nodes": quad.radial_count,
            "angular_nodes": quad.angular_count,
            "r_max": quad.r_max,
        },
    )
    rep.check("max |block - I|", float(np.abs(block - eye).max()), 1e-8)
    rep.check("max |diag - 1|", float(np.abs(np.diag(block) - 1.0).max()), 1e-8)
    off = block - np.diag(np.diag(block))
    rep.check("max |off-diagonal|", float(np.abs(off).max()), 1e-10)
    rep.check("node-doubling drift", float(np.abs(fine - block).max()), 1e-9)
    return rep
