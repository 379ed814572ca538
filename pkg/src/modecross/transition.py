"""Transition matrix connecting canonical modes across the crossing.

The coefficients (c_1, c_2) of the canonical modes on the two sides of
the crossing are connected by a 2x2 matrix T depending only on the
exponent nu = i w |nu| and the metric product w:

    t11 = t22 = e^{i pi nu},
    t12 = i sqrt(2 pi nu) e^{i pi nu / 2} e^{+nu - nu ln|nu|} / Gamma(1 - nu),
    t21 =   sqrt(2 pi nu) e^{i pi nu / 2} e^{-nu + nu ln|nu|} / Gamma(1 + nu),

with sqrt(2 pi nu) = sqrt(2 pi |nu|) e^{i pi w / 4}.  T has unit
determinant and preserves the indefinite pairing with weights
(N_1, N_2) = (1, w): for w = +1 it is unitary (avoided crossing,
exponentially small transmission e^{-pi |nu|}), for w = -1 it is a
hyperbolic rotation (unavoidable crossing, exponentially small
tunneling).  The residual phase theta' collects the argument of
Gamma(1 + nu) relative to its large-|nu| behaviour; it enters the
off-diagonal phases as arg t12 = pi (1 + w)/2 + theta' and
arg t21 = -theta'.

match_coefficients carries inner-solution coefficients (A, B) to
canonical-mode coefficients on each side; building T that way and
comparing with the closed form is the package's primary self-check.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import loggamma

from .crossing import CrossingData
from .errors import DomainError, InterpretationError, ValidityError
from .inner import inner_asymptote
from .pcf import complex_gamma

_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass
class TransitionMatrix:
    """Closed-form transition matrix with its defining parameters."""

    entries: np.ndarray
    nu: complex
    w: int
    theta_prime: float

    @property
    def nu_abs(self) -> float:
        return abs(self.nu)

    def det(self) -> complex:
        e = self.entries
        return complex(e[0, 0] * e[1, 1] - e[0, 1] * e[1, 0])

    def flux_residuals(self, n1: float | None = None, n2: float | None = None) -> tuple[float, float, float]:
        """Relative residuals of the three pairing identities.

        With weights (N_1, N_2), defaulting to the attached (1, w):
        |t11|^2 N1 + |t21|^2 N2 = N1, the same for the second column
        with N2 on the right, and a vanishing mixed column pairing.
        Each residual is divided by the largest term entering it, so
        the values stay meaningful when the entries grow like
        e^{pi |nu|} in the unavoidable case.
        """
        if n1 is None:
            n1 = 1.0
        if n2 is None:
            n2 = float(self.w)
        e = self.entries
        a11 = abs(e[0, 0]) ** 2 * n1
        a21 = abs(e[1, 0]) ** 2 * n2
        a12 = abs(e[0, 1]) ** 2 * n1
        a22 = abs(e[1, 1]) ** 2 * n2
        s1 = max(abs(a11), abs(a21), abs(n1), 1e-300)
        s2 = max(abs(a12), abs(a22), abs(n2), 1e-300)
        m1 = np.conj(e[0, 0]) * e[0, 1] * n1
        m2 = np.conj(e[1, 0]) * e[1, 1] * n2
        s3 = max(abs(m1), abs(m2), 1e-300)
        r1 = abs(a11 + a21 - n1) / s1
        r2 = abs(a12 + a22 - n2) / s2
        r3 = abs(m1 + m2) / s3
        return float(r1), float(r2), float(r3)


def _theta_prime(nu: complex, w: int) -> float:
    nu_abs = abs(nu)
    if nu_abs == 0.0:
        return -w * math.pi / 4.0
    arg_gamma = float(loggamma(1.0 + nu).imag)
    theta_ref = w * (nu_abs * (math.log(nu_abs) - 1.0) + math.pi / 4.0)
    raw = arg_gamma - theta_ref
    return float(math.remainder(raw, 2.0 * math.pi))


def transition_matrix(nu: complex, w: int) -> TransitionMatrix:
    """Transition matrix for exponent nu and metric product w.

    nu must be purely imaginary with sign of Im nu equal to w (or
    zero, which yields the identity matrix); anything else raises
    DomainError.
    """
    nu = complex(nu)
    if w not in (-1, 1):
        raise DomainError(f"w must be -1 or +1, got {w!r}")
    if abs(nu.real) > 1e-12 * max(1.0, abs(nu)):
        raise DomainError(f"nu = {nu} is not purely imaginary")
    nu = 1j * nu.imag
    nu_abs = abs(nu)
    if nu_abs > 0 and nu.imag * w < 0:
        raise DomainError(f"sign of Im nu = {nu.imag:.3g} inconsistent with w = {w}")
    if nu_abs == 0.0:
        return TransitionMatrix(entries=np.eye(2, dtype=complex), nu=0.0 + 0.0j, w=w, theta_prime=-w * math.pi / 4.0)

    ln_nu = math.log(nu_abs)
    sqrt_2pinu = math.sqrt(2.0 * math.pi * nu_abs) * cmath.exp(0.25j * math.pi * w)
    diag = cmath.exp(1j * math.pi * nu)
    t12 = 1j * sqrt_2pinu * cmath.exp(0.5j * math.pi * nu) * cmath.exp(nu - nu * ln_nu) / complex_gamma(1.0 - nu)
    t21 = sqrt_2pinu * cmath.exp(0.5j * math.pi * nu) * cmath.exp(-nu + nu * ln_nu) / complex_gamma(1.0 + nu)
    entries = np.array([[diag, t12], [t21, diag]], dtype=complex)
    return TransitionMatrix(entries=entries, nu=nu, w=w, theta_prime=_theta_prime(nu, w))


def polar_form(tm: TransitionMatrix) -> dict:
    """Magnitude/phase decomposition with closed-form magnitudes.

    Magnitudes: |t11| = |t22| = e^{-pi |nu| w}, |t12| = |t21| =
    sqrt(1 - e^{-2 pi |nu|}) e^{-pi |nu| (w - 1)/2}.  Phases: 0 on the
    diagonal, pi (1 + w)/2 + theta' and -theta' off it.  Reconstructing
    entries from these agrees with tm.entries to round-off.
    """
    nu_abs = tm.nu_abs
    w = tm.w
    off = 0.0 if nu_abs == 0.0 else math.sqrt(1.0 - math.exp(-2.0 * math.pi * nu_abs))
    off *= math.exp(-math.pi * nu_abs * (w - 1) / 2.0)
    mags = np.array(
        [
            [math.exp(-math.pi * nu_abs * w), off],
            [off, math.exp(-math.pi * nu_abs * w)],
        ]
    )
    if nu_abs == 0.0:
        phases = np.zeros((2, 2))
    else:
        p12 = math.remainder(math.pi * (1 + w) / 2.0 + tm.theta_prime, 2.0 * math.pi)
        phases = np.array([[0.0, p12], [-tm.theta_prime, 0.0]])
    return {
        "magnitudes": mags,
        "phases": phases,
        "theta_prime": tm.theta_prime,
        "nu_abs": nu_abs,
        "w": w,
    }


def asymptotic_limits(nu: complex, w: int) -> tuple[np.ndarray, float]:
    """Limit form of T for large |nu| and the deviation of the exact matrix.

    Requires |nu| >= 3.  For w = +1 the limit is the quarter rotation
    [[0, -1], [1, 0]] and the deviation is entrywise against T itself;
    for w = -1 the limit is [[1, 1], [1, 1]] reached by e^{-pi |nu|} T,
    and the deviation is measured on that normalized matrix.
    """
    tm = transition_matrix(nu, w)
    if tm.nu_abs < 3.0:
        raise ValidityError(f"asymptotic limits need |nu| >= 3, got {tm.nu_abs:.3g}")
    if w == 1:
        limit = np.array([[0.0, -1.0], [1.0, 0.0]], dtype=complex)
        dev = float(np.abs(tm.entries - limit).max())
    else:
        limit = np.ones((2, 2), dtype=complex)
        dev = float(np.abs(math.exp(-math.pi * tm.nu_abs) * tm.entries - limit).max())
    return limit, dev


def reflection_transmission(tm: TransitionMatrix) -> tuple[complex, complex]:
    """Reflection and tunneling coefficients of an unavoidable crossing.

    Defined as R = -t21 / t22 and Tc = det T / t22; |R|^2 + |Tc|^2 = 1.
    For an avoided crossing (w = +1) the scattering reading does not
    apply and InterpretationError points the caller at renumbered().
    """
    if tm.w == 1:
        raise InterpretationError(
            "reflection/transmission reading applies to unavoidable crossings only; "
            "for w = +1 use renumbered() for the transmission/excitation form"
        )
    e = tm.entries
    r = -e[1, 0] / e[1, 1]
    tc = tm.det() / e[1, 1]
    return complex(r), complex(tc)


def renumbered(tm: TransitionMatrix) -> np.ndarray:
    """T with the right-side numbering swapped: T @ [[0, 1], [-1, 0]].

    In this numbering an avoided crossing reads as transmission
    |t~11| = sqrt(1 - e^{-2 pi |nu|}) with phase theta', and excitation
    t~21 = -e^{-pi |nu|}.
    """
    swap = np.array([[0.0, 1.0], [-1.0, 0.0]], dtype=complex)
    return tm.entries @ swap


def match_coefficients(data: CrossingData, coeff_a: complex, coeff_b: complex) -> dict:
    """Canonical-mode coefficients matched from an inner solution.

    Carries the asymptotic structure coefficients of the inner
    solution onto the rearranged outer modes, which contributes the
    constant e^{-+ i zeta} and the frame norm factors.  Returns
    {"left": (c1, c2), "right": (c1, c2)}.
    """
    out = {}
    n1 = abs(data.frame0.norms[0])
    n2 = abs(data.frame0.norms[1])
    for name, sgn in (("left", -1), ("right", 1)):
        c_phi1, c_phi2 = inner_asymptote(data, coeff_a, coeff_b, sgn)
        c1 = c_phi1 * math.sqrt(n1) * cmath.exp(-1j * data.zeta)
        c2 = c_phi2 * math.sqrt(n2) * cmath.exp(1j * data.zeta)
        out[name] = (complex(c1), complex(c2))
    return out


def transition_from_matching(data: CrossingData) -> np.ndarray:
    """T assembled by matching two independent inner solutions.

    Builds the linear maps (A, B) -> (c1, c2) on each side from
    match_coefficients and returns M_right M_left^{-1}.  Agreement
    with transition_matrix(data.nu, data.w) is the package's primary
    cross-validation; both routes are kept separate on purpose.
    """
    basis = ((1.0 + 0.0j, 0.0 + 0.0j), (0.0 + 0.0j, 1.0 + 0.0j))
    m_left = np.empty((2, 2), dtype=complex)
    m_right = np.empty((2, 2), dtype=complex)
    for col, (ca, cb) in enumerate(basis):
        mc = match_coefficients(data, ca, cb)
        m_left[:, col] = mc["left"]
        m_right[:, col] = mc["right"]
    return m_right @ np.linalg.inv(m_left)
