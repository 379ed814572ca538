"""Inner solution around the crossing in the stretched variable.

In the window |x - x_star| = O(sqrt(hbar)) the evolution reduces to a
two-level system for the coefficients (a_1, a_2) on the frozen pair
frame at x_star:

    -i a_1' + (tau + b) Q a_1 - (B_12/N_1) a_2 = 0,
    -i a_2' - (B_21/N_2) a_1 - (tau + b) Q a_2 = 0,

whose second component solves a Weber equation.  The general solution
is a combination of parabolic cylinder functions D_nu(sigma (tau + b))
and D_nu(-sigma (tau + b)) with sigma = e^{-i pi/4} sqrt(2 Q), the
first component following from the ladder recurrences rather than
numerical differentiation.  Both rays sigma (tau + b) for tau + b of
either sign stay on arg t in {-pi/4, 3 pi/4}, which selects the
recessive-branch coefficients used by the asymptotics.

As |tau| grows the solution settles onto the rearranged outer powers
|t|^{+-nu} times chirps e^{-+ i Q (tau+b)^2/2}; inner_asymptote gives
the frozen-frame coefficients of those structures on each side, which
is the data the transition matrix is read from.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .crossing import CrossingData
from .errors import AsymptoticsWarning, ConfigError
from .pcf import PcfValue, dnu_pair, xi

VALIDITY_EXPONENT = -1.0 / 6.0


@dataclass
class InnerSolution:
    """One inner solution: coefficients of the two Weber basis members."""

    data: CrossingData
    coeff_a: complex
    coeff_b: complex
    hbar: float
    samples: dict = field(default_factory=dict)


def _coupling_prefactor(data: CrossingData) -> complex:
    """B_12 / (sigma N_1) on the gauge-fixed frame at x_star."""
    return data.b12 / (data.sigma * data.frame0.norms[0])


def _basis_values(data: CrossingData, tau: float) -> tuple[PcfValue, PcfValue]:
    t = data.sigma * (tau + data.b_shift)
    return dnu_pair(data.nu, t), dnu_pair(data.nu, -t)


def inner_leading(data: CrossingData, coeff_a: complex, coeff_b: complex, tau: float) -> tuple[complex, complex]:
    """Frozen-frame coefficients (a_1, a_2) of the inner solution at tau."""
    plus, minus = _basis_values(data, tau)
    a2 = coeff_a * plus.d_nu + coeff_b * minus.d_nu
    a1 = -1j * _coupling_prefactor(data) * (
        coeff_a * plus.d_nu_minus_1 - coeff_b * minus.d_nu_minus_1
    )
    return complex(a1), complex(a2)


def inner_derivatives(
    data: CrossingData, coeff_a: complex, coeff_b: complex, tau: float
) -> tuple[complex, complex]:
    """d(a_1)/d tau and d(a_2)/d tau from the ladder recurrences.

    Uses D_nu'(s) = nu D_{nu-1}(s) - (s/2) D_nu(s) for the second
    component and D_{nu-1}'(s) = (s/2) D_{nu-1}(s) - D_nu(s) for the
    first, so no finite differencing enters.
    """
    plus, minus = _basis_values(data, tau)
    sig = data.sigma
    t = sig * (tau + data.b_shift)
    nu = data.nu
    da2 = sig * (
        coeff_a * (nu * plus.d_nu_minus_1 - 0.5 * t * plus.d_nu)
        - coeff_b * (nu * minus.d_nu_minus_1 + 0.5 * t * minus.d_nu)
    )
    da1 = -1j * _coupling_prefactor(data) * (
        coeff_a * sig * (0.5 * t * plus.d_nu_minus_1 - plus.d_nu)
        - coeff_b * (-sig) * (-0.5 * t * minus.d_nu_minus_1 - minus.d_nu)
    )
    return complex(da1), complex(da2)


def system_residual(data: CrossingData, coeff_a: complex, coeff_b: complex, tau: float) -> float:
    """Residual of the two-level system at tau, normalized by the solution size."""
    a1, a2 = inner_leading(data, coeff_a, coeff_b, tau)
    da1, da2 = inner_derivatives(data, coeff_a, coeff_b, tau)
    n1, n2 = data.frame0.norms[0], data.frame0.norms[1]
    b12 = data.b12
    b21 = complex(np.conj(b12))
    u = (tau + data.b_shift) * data.q_slope
    r1 = -1j * da1 + u * a1 - (b12 / n1) * a2
    r2 = -1j * da2 - (b21 / n2) * a1 - u * a2
    scale = max(abs(a1), abs(a2), 1e-300)
    return float(max(abs(r1), abs(r2)) / scale)


def factorization_residual(data: CrossingData, coeff_a: complex, coeff_b: complex, tau: float) -> float:
    """Residual of the decoupled Weber equation for the second component.

    a_2'' + ((tau+b)^2 Q^2 - i Q + nu sigma^2) a_2 = 0, with a_2''
    evaluated through D_nu''(s) = (s^2/4 - nu - 1/2) D_nu(s).
    """
    plus, minus = _basis_values(data, tau)
    sig2 = data.sigma ** 2
    t = data.sigma * (tau + data.b_shift)
    a2 = coeff_a * plus.d_nu + coeff_b * minus.d_nu
    dd = sig2 * (0.25 * t * t - data.nu - 0.5) * (coeff_a * plus.d_nu + coeff_b * minus.d_nu)
    u = (tau + data.b_shift) * data.q_slope
    r = dd + (u * u - 1j * data.q_slope + data.nu * sig2) * a2
    return float(abs(r))


def inner_full(
    data: CrossingData, coeff_a: complex, coeff_b: complex, hbar: float, tau: float
) -> np.ndarray:
    """Full inner vector at tau: frame coefficients times the common phase.

    Emits AsymptoticsWarning outside |tau| <= hbar^(-1/6), where the
    frozen-frame reduction starts to lose accuracy; the value is still
    returned.
    """
    if abs(tau) > hbar ** VALIDITY_EXPONENT:
        warnings.warn(
            f"inner solution evaluated at |tau| = {abs(tau):.3g}, beyond its validity "
            f"window hbar^(-1/6) = {hbar ** VALIDITY_EXPONENT:.3g}",
            AsymptoticsWarning,
            stacklevel=2,
        )
    a1, a2 = inner_leading(data, coeff_a, coeff_b, tau)
    sq = math.sqrt(hbar)
    u = tau + data.b_shift
    common = cmath.exp(
        1j / sq * (
            data.beta0 * u
            + sq * (data.avg_b * u + 0.5 * data.avg_slope * (tau * tau - data.b_shift ** 2))
        )
    )
    phi1 = data.frame0.modes[:, 0]
    phi2 = data.frame0.modes[:, 1]
    return common * (a1 * phi1 + a2 * phi2)


def sample_inner(
    data: CrossingData, coeff_a: complex, coeff_b: complex, hbar: float, taus
) -> InnerSolution:
    """InnerSolution with (a_1, a_2) sampled on a tau grid."""
    sol = InnerSolution(data=data, coeff_a=complex(coeff_a), coeff_b=complex(coeff_b), hbar=hbar)
    for tau in taus:
        sol.samples[float(tau)] = inner_leading(data, coeff_a, coeff_b, tau)
    return sol


def inner_asymptote(
    data: CrossingData, coeff_a: complex, coeff_b: complex, tau_sign: int
) -> tuple[complex, complex]:
    """Frozen-frame structure coefficients of the inner solution at large |tau|.

    Returns (c_phi1, c_phi2) such that, as tau -> tau_sign * infinity,

        a_1 ~ c_phi1 |sigma (tau+b)|^(-nu) e^{-i Q (tau+b)^2 / 2},
        a_2 ~ c_phi2 |sigma (tau+b)|^(+nu) e^{+i Q (tau+b)^2 / 2}.

    The a_1 coefficient comes entirely from the recessive branch of
    D_{nu-1} on the ray arg t = 3 pi/4, with xi_{nu-1} = xi_nu / nu;
    the neglected dominant branch decays like 1/|tau|.
    """
    if tau_sign not in (-1, 1):
        raise ConfigError("tau_sign must be -1 or +1")
    nu = data.nu
    mu = _coupling_prefactor(data)
    e5 = cmath.exp(1.25j * math.pi * nu)
    e3 = cmath.exp(0.75j * math.pi * nu)
    e1m = cmath.exp(-0.25j * math.pi * nu)
    xi_m1 = xi(nu - 1.0)
    if tau_sign < 0:
        c_phi1 = -1j * mu * xi_m1 * coeff_a * e5
        c_phi2 = coeff_a * e3 + coeff_b * e1m
    else:
        c_phi1 = 1j * mu * xi_m1 * coeff_b * e5
        c_phi2 = coeff_a * e1m + coeff_b * e3
    return complex(c_phi1), complex(c_phi2)


def asymptote_values(
    data: CrossingData, coeff_a: complex, coeff_b: complex, tau: float
) -> tuple[complex, complex]:
    """(a_1, a_2) predicted by the large-|tau| structures at finite tau."""
    sign = 1 if tau + data.b_shift > 0 else -1
    c1, c2 = inner_asymptote(data, coeff_a, coeff_b, sign)
    u = tau + data.b_shift
    at = abs(data.sigma) * abs(u)
    chirp = cmath.exp(0.5j * data.q_slope * u * u)
    a2 = c2 * cmath.exp(data.nu * math.log(at)) * chirp
    a1 = c1 * cmath.exp(-data.nu * math.log(at)) / chirp
    return complex(a1), complex(a2)
