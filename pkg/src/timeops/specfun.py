r"""Special functions and quadrature rules.

Gamma functions, modified Bessel functions :math:`I_\nu(x)` and
:math:`K_\nu(x)` of real order :math:`\nu \ge 0`, and Gauss-Legendre rules.

The Bessel routines follow the classical Temme / Steed scheme:

* ``x < 2``: Temme's series for :math:`K_\mu, K_{\mu+1}` with
  :math:`|\mu| \le 1/2`.
* ``x >= 2``: Steed's continued fraction (CF2) for the same pair.
* :math:`I_\nu` is recovered from the Wronskian together with the ratio
  :math:`I_\nu'/I_\nu` from the continued fraction CF1, except for
  ``x <= SERIES_CROSSOVER`` where its power series is summed directly.

Everything is computed in exponentially scaled form
(:math:`e^{-x} I_\nu`, :math:`e^{x} K_\nu`); the unscaled values are rebuilt
in log space and overflow is signalled explicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

__all__ = [
    "SpecialFunctionError",
    "QuadratureSpec",
    "gamma_fn",
    "ln_gamma",
    "bessel_I",
    "bessel_K",
    "bessel_Ie",
    "bessel_Ke",
    "log_bessel_K",
    "log_bessel_I",
    "gauss_legendre",
    "decay_cutoff",
    "radial_quadrature",
]

SERIES_CROSSOVER = 2.0
_EPS = 1e-16
_MAXIT = 100000
_FPMIN = 1e-300
_RESCALE = 1e250

# Taylor coefficients of 1/Gamma(z) = sum c_k z^k (Abramowitz & Stegun 6.1.34)
_RGAMMA = (
    1.0,
    0.5772156649015329,
    -0.6558780715202538,
    -0.0420026350340952,
    0.1665386113822915,
    -0.0421977345555443,
    -0.0096219715278770,
    0.0072189432466630,
    -0.0011651675918591,
    -0.0002152416741149,
    0.0001280502823882,
    -0.0000201348547807,
    -0.0000012504934821,
    0.0000011330272320,
    -0.0000002056338417,
    0.0000000061160950,
    0.0000000050020075,
    -0.0000000011812746,
    0.0000000001043427,
    0.0000000000077823,
    -0.0000000000036968,
    0.0000000000005100,
    -0.0000000000000206,
    -0.0000000000000054,
    0.0000000000000014,
    0.0000000000000001,
)


class SpecialFunctionError(ValueError):
    """Argument outside the supported domain, or result not representable."""


# ---------------------------------------------------------------------------
# Gamma
# ---------------------------------------------------------------------------


def gamma_fn(x: float) -> float:
    """Gamma function for ``x > 0``.

    Raises
    ------
    SpecialFunctionError
        If ``x <= 0``.
    OverflowError
        If ``x > 171`` (result exceeds the double range).
    """
    x = float(x)
    if not x > 0.0:
        raise SpecialFunctionError(f"gamma_fn: domain error, x={x!r} <= 0")
    if x > 171.0:
        raise OverflowError(f"gamma_fn: Gamma({x}) overflows a double")
    return math.gamma(x)


def ln_gamma(x: float) -> float:
    """Natural log of the Gamma function for ``x > 0``."""
    x = float(x)
    if not x > 0.0:
        raise SpecialFunctionError(f"ln_gamma: domain error, x={x!r} <= 0")
    return math.lgamma(x)


# ---------------------------------------------------------------------------
# Modified Bessel functions
# ---------------------------------------------------------------------------


def _temme_gammas(mu: float) -> tuple[float, float, float, float]:
    # gam1 = (1/G(1-mu) - 1/G(1+mu)) / (2 mu), gam2 = (1/G(1-mu) + 1/G(1+mu)) / 2
    mu2 = mu * mu
    gam1 = 0.0
    gam2 = 0.0
    power = 1.0
    for j in range(0, len(_RGAMMA) - 1, 2):
        gam2 += _RGAMMA[j] * power
        gam1 -= _RGAMMA[j + 1] * power
        power *= mu2
    # 1/G(1 + mu) = gam2 - mu * gam1, 1/G(1 - mu) = gam2 + mu * gam1
    return gam1, gam2, gam2 - mu * gam1, gam2 + mu * gam1


def _k_pair_scaled(mu: float, x: float) -> tuple[float, float]:
    """Return (e^x K_mu(x), e^x K_{mu+1}(x)) for |mu| <= 1/2, x > 0."""
    if x < SERIES_CROSSOVER:
        x2 = 0.5 * x
        pimu = math.pi * mu
        fact = 1.0 if abs(pimu) < _EPS else pimu / math.sin(pimu)
        d = -math.log(x2)
        e = mu * d
        fact2 = 1.0 if abs(e) < _EPS else math.sinh(e) / e
        gam1, gam2, gampl, gammi = _temme_gammas(mu)
        ff = fact * (gam1 * math.cosh(e) + gam2 * fact2 * d)
        total = ff
        e = math.exp(e)
        p = 0.5 * e / gampl
        q = 0.5 / (e * gammi)
        c = 1.0
        d = x2 * x2
        total1 = p
        mu2 = mu * mu
        for i in range(1, _MAXIT):
            ff = (i * ff + p + q) / (i * i - mu2)
            c *= d / i
            p /= i - mu
            q /= i + mu
            delta = c * ff
            total += delta
            total1 += c * (p - i * ff)
            if abs(delta) < abs(total) * _EPS:
                break
        else:
            raise SpecialFunctionError("bessel_K: Temme series did not converge")
        scale = math.exp(x)
        return total * scale, total1 * (2.0 / x) * scale

    # Steed's method for CF2 (Numerical Recipes bessik, scaled form).
    b = 2.0 * (1.0 + x)
    d = 1.0 / b
    h = delh = d
    q1, q2 = 0.0, 1.0
    a1 = 0.25 - mu * mu
    q = c = a1
    a = -a1
    s = 1.0 + q * delh
    for i in range(2, _MAXIT):
        a -= 2 * (i - 1)
        c = -a * c / i
        qnew = (q1 - b * q2) / a
        q1, q2 = q2, qnew
        q += c * qnew
        b += 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h += delh
        dels = q * delh
        s += dels
        if abs(dels / s) < _EPS:
            break
    else:
        raise SpecialFunctionError("bessel_K: continued fraction CF2 did not converge")
    h = a1 * h
    kmu = math.sqrt(math.pi / (2.0 * x)) / s
    k1 = kmu * (mu + x + 0.5 - h) / x
    return kmu, k1


def _cf1_ratio(nu: float, x: float) -> float:
    """I'_nu(x) / I_nu(x) by modified Lentz evaluation of CF1."""
    xi2 = 2.0 / x
    h = max(nu / x, _FPMIN)
    b = xi2 * nu
    d = 0.0
    c = h
    for _ in range(_MAXIT):
        b += xi2
        d = 1.0 / (b + d)
        c = b + 1.0 / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise SpecialFunctionError("bessel_I: continued fraction CF1 did not converge")


def _scaled_pair(nu: float, x: float) -> tuple[float, float]:
    """Return (e^{-x} I_nu(x), e^{x} K_nu(x)) for nu >= 0, x > 0."""
    nl = int(nu + 0.5)
    mu = nu - nl
    kmu, k1 = _k_pair_scaled(mu, x)

    # Downward recurrence of (I, I') from nu to mu, started from CF1.
    ril = _FPMIN
    ripl = _cf1_ratio(nu, x) * ril
    ril1, rip1 = ril, ripl
    fact = nu / x
    for _ in range(nl, 0, -1):
        ritemp = fact * ril + ripl
        fact -= 1.0 / x
        ripl = fact * ritemp + ril
        ril = ritemp
        if abs(ril) > _RESCALE:
            ril /= _RESCALE
            ripl /= _RESCALE
            ril1 /= _RESCALE
            rip1 /= _RESCALE
    f = ripl / ril
    kmup = mu / x * kmu - k1
    # Wronskian I_mu K'_mu - I'_mu K_mu = -1/x, in scaled variables
    imu = 1.0 / (x * (f * kmu - kmup))
    i_nu = imu * ril1 / ril

    for i in range(1, nl + 1):
        kmu, k1 = k1, (mu + i) * (2.0 / x) * k1 + kmu
    return i_nu, kmu


def _log_I_series(nu: float, x: float) -> float:
    # log I_nu(x) from the power series; all terms positive
    y = 0.25 * x * x
    term = 1.0
    total = 1.0
    for m in range(1, 1000):
        term *= y / (m * (nu + m))
        total += term
        if term < total * _EPS:
            break
    return nu * math.log(0.5 * x) - math.lgamma(nu + 1.0) + math.log(total)


def _check_order(nu: float, name: str) -> float:
    nu = float(nu)
    if not (nu >= 0.0 and math.isfinite(nu)):
        raise SpecialFunctionError(f"{name}: order nu={nu!r} must be a finite real >= 0")
    return nu


def _log_I(nu: float, x: float) -> float:
    if x <= SERIES_CROSSOVER:
        return _log_I_series(nu, x)
    ie, _ = _scaled_pair(nu, x)
    return math.log(ie) + x


def _scalar_I(nu: float, x: float, scaled: bool) -> float:
    nu = _check_order(nu, "bessel_I")
    x = float(x)
    if not x >= 0.0:
        raise SpecialFunctionError(f"bessel_I: domain error, x={x!r} < 0")
    if x == 0.0:
        return 1.0 if nu == 0.0 else 0.0
    if x <= SERIES_CROSSOVER:
        val = _log_I_series(nu, x)
        if scaled:
            val -= x
        return math.exp(val) if val > -745.0 else 0.0
    ie, _ = _scaled_pair(nu, x)
    if scaled:
        return ie
    logv = math.log(ie) + x
    if logv > 709.78:
        raise OverflowError(f"bessel_I({nu}, {x}) overflows; use bessel_Ie")
    return math.exp(logv)


def _scalar_K(nu: float, x: float, scaled: bool) -> float:
    nu = _check_order(nu, "bessel_K")
    x = float(x)
    if not x > 0.0:
        raise SpecialFunctionError(f"bessel_K: domain error, x={x!r} <= 0")
    _, ke = _scaled_pair(nu, x)
    if scaled:
        return ke
    if math.isinf(ke):
        raise OverflowError(f"bessel_K({nu}, {x}) overflows")
    return ke * math.exp(-x)


def _vectorize(fn, nu, x, scaled):
    if np.ndim(nu) == 0 and np.ndim(x) == 0:
        return fn(nu, x, scaled)
    nu_b, x_b = np.broadcast_arrays(np.asarray(nu, float), np.asarray(x, float))
    out = np.empty(nu_b.shape)
    for idx in np.ndindex(out.shape):
        out[idx] = fn(nu_b[idx], x_b[idx], scaled)
    return out


def bessel_I(nu, x):
    r"""Modified Bessel function of the first kind :math:`I_\nu(x)`.

    Accepts scalars or broadcastable arrays. ``nu >= 0`` and ``x >= 0``.
    Raises ``OverflowError`` once the value leaves the double range
    (about ``x > 713``); use :func:`bessel_Ie` there.
    """
    return _vectorize(_scalar_I, nu, x, False)


def bessel_K(nu, x):
    r"""Modified Bessel function of the second kind :math:`K_\nu(x)`, ``x > 0``."""
    return _vectorize(_scalar_K, nu, x, False)


def bessel_Ie(nu, x):
    r"""Exponentially scaled :math:`e^{-x} I_\nu(x)`."""
    return _vectorize(_scalar_I, nu, x, True)


def bessel_Ke(nu, x):
    r"""Exponentially scaled :math:`e^{x} K_\nu(x)`."""
    return _vectorize(_scalar_K, nu, x, True)


def log_bessel_I(nu: float, x: float) -> float:
    """``log I_nu(x)`` for ``x > 0``, valid far beyond the overflow threshold."""
    nu = _check_order(nu, "log_bessel_I")
    if not x > 0.0:
        raise SpecialFunctionError(f"log_bessel_I: domain error, x={x!r} <= 0")
    return _log_I(nu, float(x))


def log_bessel_K(nu: float, x: float) -> float:
    """``log K_nu(x)`` for ``x > 0``."""
    return math.log(_scalar_K(nu, x, True)) - float(x)


# ---------------------------------------------------------------------------
# Quadrature
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuadratureSpec:
    """Radial Gauss-Legendre rule on ``[0, r_max]`` plus an angular node count.

    ``radial_nodes`` / ``radial_weights`` discretize the radius ``r = |z|``;
    ``angular_count`` is the number of angle nodes used over one branch
    interval of ``arg z``.
    """

    radial_nodes: np.ndarray
    radial_weights: np.ndarray
    r_max: float
    angular_count: int = 256

    def __post_init__(self):
        nodes = np.asarray(self.radial_nodes, float)
        weights = np.asarray(self.radial_weights, float)
        if nodes.shape != weights.shape or nodes.ndim != 1:
            raise ValueError("radial nodes and weights must be 1-D of equal length")
        if np.any(nodes <= 0.0) or np.any(nodes >= self.r_max):
            raise ValueError("radial nodes must lie in (0, r_max)")
        if np.any(weights <= 0.0):
            raise ValueError("radial weights must be positive")
        if self.angular_count < 1:
            raise ValueError("angular_count must be positive")
        object.__setattr__(self, "radial_nodes", nodes)
        object.__setattr__(self, "radial_weights", weights)

    @property
    def radial_count(self) -> int:
        return len(self.radial_nodes)

    def doubled(self) -> "QuadratureSpec":
        """Same interval with twice the radial and angular nodes."""
        return radial_quadrature(
            self.r_max, 2 * self.radial_count, angular_count=2 * self.angular_count
        )


def gauss_legendre(n: int, a: float = -1.0, b: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on ``[a, b]``.

    Exact for polynomials of degree ``<= 2n - 1``.
    """
    if int(n) != n or n < 1:
        raise ValueError(f"gauss_legendre: n must be a positive integer, got {n!r}")
    if not a < b:
        raise ValueError(f"gauss_legendre: need a < b, got [{a}, {b}]")
    x, w = leggauss(int(n))
    half = 0.5 * (b - a)
    return half * x + 0.5 * (a + b), half * w


def decay_cutoff(order: float, power: float, ratio: float = 1e-18) -> float:
    """Radius beyond which ``K_order(2r) r**power`` stays below ``ratio`` of its peak.

    The peak is located on a coarse log-space scan; the cutoff is then found
    by bisection on the (eventually monotone, ``~exp(-2r)``) tail.
    """
    if power <= order:
        raise ValueError("decay_cutoff: integrand not integrable at r=0 (need power > order)")

    def logf(r):
        return log_bessel_K(order, 2.0 * r) + power * math.log(r)

    grid = np.linspace(1e-3, max(10.0, 2.0 * power), 400)
    vals = [logf(r) for r in grid]
    i_peak = int(np.argmax(vals))
    target = vals[i_peak] + math.log(ratio)
    lo = float(grid[i_peak])
    hi = lo + 1.0
    while logf(hi) > target:
        lo, hi = hi, 2.0 * hi
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if logf(mid) > target:
            lo = mid
        else:
            hi = mid
    return hi


def radial_quadrature(r_max: float, n: int = 200, angular_count: int = 256) -> QuadratureSpec:
    """Gauss-Legendre :class:`QuadratureSpec` on ``[0, r_max]``."""
    nodes, weights = gauss_legendre(n, 0.0, r_max)
    return QuadratureSpec(nodes, weights, float(r_max), int(angular_count))
