"""Weber parabolic cylinder functions of near-imaginary order.

Provides D_nu(t) together with D_{nu-1}(t) for orders nu on or near the
imaginary axis, evaluated by a Maclaurin series around the origin and
by sector-dependent Poincare asymptotics at large |t|.  The two regimes
are cross-checked against each other on an overlap annulus, and every
value carries a running error estimate.

The asymptotics carry a recessive branch whose coefficient depends on
the sector of arg t; the rays arg t = -pi/4 and 3*pi/4 (and their
mirrors) are the ones exercised by the crossing analysis.  Uniform
large-order expansions are out of scope: orders are capped at
|Im nu| <= 50 and arguments at |t| <= 60.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

from scipy.special import gamma as _gamma_fn

from .errors import DomainError, PrecisionError

T_SWITCH = 7.0
OVERLAP_BAND = (5.0, 8.0)
IM_NU_MAX = 50.0
ABS_T_MAX = 60.0
IM_Z_MAX = 60.0

_SQRT_2PI = math.sqrt(2.0 * math.pi)
_SERIES_KMAX = 600
_ASYM_KMAX = 40
_EPS = 2.2e-16


@dataclass(frozen=True)
class PcfValue:
    """One evaluation of the Weber pair (D_nu, D_{nu-1}) at a point.

    Attributes
    ----------
    nu : complex
        Order of the dominant member of the pair.
    t : complex
        Argument.
    d_nu, d_nu_minus_1 : complex
        Function values at order nu and nu - 1.
    regime : str
        "series" or "asymptotic", whichever produced the values.
    est_error : float
        Relative error estimate: round-off amplification for the
        series, first omitted term for the asymptotics.
    """

    nu: complex
    t: complex
    d_nu: complex
    d_nu_minus_1: complex
    regime: str
    est_error: float


def complex_gamma(z: complex) -> complex:
    """Gamma function on the complex plane.

    Raises DomainError at the poles (nonpositive integers) and for
    |Im z| beyond the validated strip.
    """
    z = complex(z)
    if abs(z.imag) > IM_Z_MAX:
        raise DomainError(f"complex_gamma validated only for |Im z| <= {IM_Z_MAX}, got {z}")
    if abs(z.imag) < 1e-14 and z.real <= 0.5:
        nearest = round(z.real)
        if nearest <= 0 and abs(z.real - nearest) < 1e-14:
            raise DomainError(f"gamma pole at z = {nearest}")
    return complex(_gamma_fn(z))


def _recip_gamma(z: complex) -> complex:
    """1/Gamma(z), with the poles mapped to exact zeros."""
    z = complex(z)
    if abs(z.imag) < 1e-14 and z.real <= 0.5:
        nearest = round(z.real)
        if nearest <= 0 and abs(z.real - nearest) < 1e-14:
            return 0.0 + 0.0j
    return 1.0 / complex(_gamma_fn(z))


def xi(nu: complex) -> complex:
    """Recessive-branch coefficient -sqrt(2*pi) e^{-i*pi*nu} / Gamma(-nu).

    Raises DomainError when -nu sits on a Gamma pole, i.e. for
    nonnegative integer nu where the coefficient degenerates.
    """
    nu = complex(nu)
    if abs(nu.imag) < 1e-14:
        nearest = round(nu.real)
        if nearest >= 0 and abs(nu.real - nearest) < 1e-14:
            raise DomainError(f"xi undefined at nonnegative integer order nu = {nearest}")
    return -_SQRT_2PI * cmath.exp(-1j * math.pi * nu) / complex_gamma(-nu)


def _series_value(nu: complex, t: complex) -> tuple[complex, float]:
    """Maclaurin evaluation of D_nu(t); returns (value, relative error estimate)."""
    c0 = 2.0 ** (nu / 2.0) * math.sqrt(math.pi) * _recip_gamma((1.0 - nu) / 2.0)
    c1 = -(2.0 ** ((nu + 1.0) / 2.0)) * math.sqrt(math.pi) * _recip_gamma(-nu / 2.0)
    # c[k+2] = (c[k-2]/4 - (nu + 1/2) c[k]) / ((k+2)(k+1))
    coeff = nu + 0.5
    cm2, cm1, ck0, ck1 = 0.0 + 0.0j, 0.0 + 0.0j, c0, c1
    total = c0 + c1 * t
    tk = t
    maxmag = max(abs(c0), abs(c1 * t))
    last = abs(c1 * t)
    quiet = 0
    n_terms = 2
    at2 = abs(t) * abs(t)
    for k in range(0, _SERIES_KMAX, 1):
        cnext = (cm2 / 4.0 - coeff * ck0) / ((k + 2.0) * (k + 1.0))
        tk = tk * t
        term = cnext * tk
        total += term
        n_terms += 1
        mag = abs(term)
        maxmag = max(maxmag, mag)
        last = mag
        if mag < 1e-22 * max(abs(total), 1e-300) and k > at2:
            quiet += 1
            if quiet >= 4:
                break
        else:
            quiet = 0
        cm2, cm1, ck0, ck1 = cm1, ck0, ck1, cnext
    denom = max(abs(total), 1e-300)
    # random-walk model for the accumulated summation round-off
    est = (_EPS * maxmag * math.sqrt(n_terms) + last) / denom
    return total, est


def _asym_sum(nu: complex, t: complex, branch: int) -> tuple[complex, float]:
    """Poincare sum for one exponential branch, truncated at its smallest term.

    branch=1 is the e^{-t^2/4} t^nu series, branch=2 the e^{+t^2/4}
    t^{-nu-1} one.  Returns (sum, magnitude of first omitted term).
    """
    it2 = 1.0 / (t * t)
    terms = [1.0 + 0.0j]
    a = 1.0 + 0.0j
    for k in range(1, _ASYM_KMAX + 1):
        if branch == 1:
            a = a * (-(nu - 2 * k + 2) * (nu - 2 * k + 1)) * it2 / (2.0 * k)
        else:
            a = a * ((nu + 2 * k - 1) * (nu + 2 * k)) * it2 / (2.0 * k)
        terms.append(a)
        if abs(a) > 1e12:
            break
    mags = [abs(v) for v in terms]
    # optimal truncation: stop just before the globally smallest term
    kmin = min(range(1, len(terms)), key=lambda i: mags[i])
    return sum(terms[:kmin]), mags[kmin]


def _sector_coefficient(nu: complex, t: complex) -> complex:
    """Coefficient of the recessive branch as a function of arg t."""
    a = cmath.phase(t)
    if abs(a) <= math.pi / 2.0 + 1e-13:
        return 0.0 + 0.0j
    base = -_SQRT_2PI * cmath.exp(-1j * math.pi * nu) * _recip_gamma(-nu)
    if a > 0.0:
        if a > 1.25 * math.pi + 1e-13:
            raise DomainError(f"arg t = {a:.6f} outside the supported sectors")
        return base * cmath.exp(2j * math.pi * nu)
    if a < -1.25 * math.pi - 1e-13:
        raise DomainError(f"arg t = {a:.6f} outside the supported sectors")
    return base


def _asym_value(nu: complex, t: complex, coeff_c: complex) -> tuple[complex, float]:
    """Two-branch asymptotic value with the given recessive coefficient."""
    s1, est1 = _asym_sum(nu, t, 1)
    logt = cmath.log(t)
    dominant = cmath.exp(-t * t / 4.0 + nu * logt) * s1
    err = abs(cmath.exp(-t * t / 4.0 + nu * logt)) * est1
    value = dominant
    if coeff_c != 0.0:
        s2, est2 = _asym_sum(nu, t, 2)
        recessive = coeff_c * cmath.exp(t * t / 4.0 - (nu + 1.0) * logt) * s2
        value = dominant + recessive
        err += abs(coeff_c * cmath.exp(t * t / 4.0 - (nu + 1.0) * logt)) * est2
    denom = max(abs(value), 1e-300)
    return value, err / denom


def dnu_asymptotic(nu: complex, t: complex, sector: str | None = None) -> complex:
    """Large-|t| evaluation of D_nu(t) on a named sector.

    Parameters
    ----------
    nu, t : complex
        Order and argument.
    sector : {"principal", "upper", "lower", None}
        "principal" uses the single dominant branch, valid for
        |arg t| < 3*pi/4.  "upper" and "lower" add the recessive
        branch with the coefficient appropriate for arg t in
        (pi/4, 5*pi/4) and its mirror.  None infers the sector from
        arg t.  A sector inconsistent with arg t raises DomainError.

    On sector overlaps the variants differ only by a recessive term
    below the superasymptotic floor e^{-|t|^2/2}.
    """
    nu = complex(nu)
    t = complex(t)
    a = cmath.phase(t)
    if sector is None:
        coeff = _sector_coefficient(nu, t)
    elif sector == "principal":
        if abs(a) > 0.75 * math.pi + 1e-13:
            raise DomainError(f"arg t = {a:.6f} outside the principal sector")
        coeff = 0.0 + 0.0j
    elif sector == "upper":
        if not (0.25 * math.pi - 1e-13 <= a <= 1.25 * math.pi + 1e-13):
            raise DomainError(f"arg t = {a:.6f} outside the upper sector")
        coeff = -_SQRT_2PI * cmath.exp(-1j * math.pi * nu) * _recip_gamma(-nu) * cmath.exp(2j * math.pi * nu)
    elif sector == "lower":
        if not (-1.25 * math.pi - 1e-13 <= a <= -0.25 * math.pi + 1e-13):
            raise DomainError(f"arg t = {a:.6f} outside the lower sector")
        coeff = -_SQRT_2PI * cmath.exp(-1j * math.pi * nu) * _recip_gamma(-nu)
    else:
        raise DomainError(f"unknown sector {sector!r}")
    value, _ = _asym_value(nu, t, coeff)
    return value


def dnu_pair(nu: complex, t: complex, t_switch: float = T_SWITCH) -> PcfValue:
    """Evaluate D_nu(t) and D_{nu-1}(t) with regime selection and cross-check.

    The Maclaurin series is used for |t| <= t_switch and the sector
    asymptotics beyond it.  Inside the overlap annulus both regimes are
    computed and compared; a disagreement beyond the combined error
    estimate raises PrecisionError.

    Raises
    ------
    DomainError
        If |Im nu| > 50 or |t| > 60.
    PrecisionError
        On cross-check failure in the annulus.
    """
    nu = complex(nu)
    t = complex(t)
    if abs(nu.imag) > IM_NU_MAX:
        raise DomainError(f"|Im nu| = {abs(nu.imag):.3g} exceeds the validated bound {IM_NU_MAX}")
    if abs(t) > ABS_T_MAX:
        raise DomainError(f"|t| = {abs(t):.3g} exceeds the validated bound {ABS_T_MAX}")

    at = abs(t)
    use_series = at <= t_switch
    if use_series:
        v0, e0 = _series_value(nu, t)
        v1, e1 = _series_value(nu - 1.0, t)
        regime = "series"
    else:
        c0 = _sector_coefficient(nu, t)
        c1 = _sector_coefficient(nu - 1.0, t)
        v0, e0 = _asym_value(nu, t, c0)
        v1, e1 = _asym_value(nu - 1.0, t, c1)
        regime = "asymptotic"

    if OVERLAP_BAND[0] <= at <= OVERLAP_BAND[1]:
        if use_series:
            w0, f0 = _asym_value(nu, t, _sector_coefficient(nu, t))
            w1, f1 = _asym_value(nu - 1.0, t, _sector_coefficient(nu - 1.0, t))
        else:
            w0, f0 = _series_value(nu, t)
            w1, f1 = _series_value(nu - 1.0, t)
        for a_val, b_val, ea, eb in ((v0, w0, e0, f0), (v1, w1, e1, f1)):
            scale = max(abs(a_val), abs(b_val), 1e-300)
            gap = abs(a_val - b_val) / scale
            if gap > max(1e-6, 8.0 * (ea + eb)):
                raise PrecisionError(
                    f"series/asymptotic cross-check failed at |t| = {at:.3f}: "
                    f"relative gap {gap:.3e} exceeds budget {max(1e-6, 8.0 * (ea + eb)):.3e}"
                )

    return PcfValue(nu=nu, t=t, d_nu=v0, d_nu_minus_1=v1, regime=regime, est_error=float(max(e0, e1)))
