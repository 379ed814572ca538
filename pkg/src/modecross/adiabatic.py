"""Adiabatic-type modes away from the crossing.

The leading mode of branch j is phi_j(x) / |N_j|^(1/2) times an
oscillatory factor built from three integrals: half the sum of the
perturbed pair eigenvalues anchored at the shifted coincidence point,
half their difference anchored at the branch-coincidence position on
the chosen side (times +1 for j = 1 and -1 for j = 2), and the
diagonal conversion phase.  Each eigenvalue integral is evaluated
piecewise: a closed form of the two-level inner reduction inside a
switch radius hbar^(1/2 - gamma_switch) around the crossing, exact
antiderivatives of the splined outer expansion beyond it.

higher_terms builds the formal power-series corrections in
sqrt(hbar): scalar eigenvalue corrections theta^(n) and vector
amplitude corrections Phi^(n), defined through a recurrence whose
partner-mode component has a closed form and whose remainder solves a
bordered (constrained) linear system.  Their growth towards the
crossing, |theta^(n)| ~ |x - x_star|^(1-n) and |Phi^(n)| ~
|x - x_star|^(-n), is what singularity_estimate measures and what
limits the outer expansion to |x - x_star| >> sqrt(hbar).

rearranged_outer re-expands the leading mode in the stretched variable
tau: a common phase, a power |sqrt(2Q) tau|^(-+nu), and a chirp
e^(-+ i Q (tau+b)^2 / 2), which is the form the inner solution matches
onto.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .crossing import CrossingData
from .errors import ConfigError, PrecisionError, SpectralGapError, ValidityError
from .pencil import ModeTable

GAMMA_SWITCH = 0.1
EXCLUSION_FACTOR = 3.0


def exclusion_radius(data: CrossingData, hbar: float) -> float:
    """Radius around x_star where the outer construction is not valid."""
    return EXCLUSION_FACTOR * math.sqrt(hbar) * max(
        abs(data.b_shift) + data.p / data.q_slope, 1.0
    )


def lower_limit(data: CrossingData, side: int, hbar: float) -> float:
    """Anchor of the difference integral: the branch-coincidence position.

    For w = -1 this is the turning point on the given side,
    x_star + sqrt(hbar)(-b +- p/Q); for w = +1 the coincidences are
    complex and the anchor is their common real part x_star - sqrt(hbar) b.
    """
    kappa = data.kappa_plus if side > 0 else data.kappa_minus
    return data.x_star + math.sqrt(hbar) * kappa.real


def _diff_antiderivative(data: CrossingData, hbar: float, u: float) -> float:
    """Even antiderivative F with F'(u) = sgn(u) sqrt(Q^2 u^2 + hbar p^2 w).

    Defined so that the integral of the inner eigenvalue difference
    beta1 - beta2 = -2 sgn(u) sqrt(Q^2 u^2 + hbar p^2 w) over [a, b]
    equals -2 (F(b) - F(a)) on either side of the coincidence point
    and even across it.
    """
    q = data.q_slope
    c = hbar * data.p_sq * data.w
    ua = abs(u)
    if c > 0:
        return 0.5 * ua * math.sqrt(q * q * ua * ua + c) + c / (2.0 * q) * math.asinh(q * ua / math.sqrt(c))
    if c < 0:
        r = math.sqrt(max(q * q * ua * ua + c, 0.0))
        arg = max(q * ua / math.sqrt(-c), 1.0)
        return 0.5 * ua * r - (-c) / (2.0 * q) * math.acosh(arg)
    return 0.5 * q * ua * ua


def _inner_sum_integral(data: CrossingData, hbar: float, x_from: float, x_to: float) -> float:
    """Closed-form integral of the inner eigenvalue sum between two points."""

    def anti(x: float) -> float:
        dx = x - data.x_star
        return 2.0 * (data.beta0 + math.sqrt(hbar) * data.avg_b) * x + data.avg_slope * dx * dx

    return anti(x_to) - anti(x_from)


def _outer_sum_integral(data: CrossingData, table: ModeTable, hbar: float, a: float, b: float) -> float:
    """Integral of the perturbed eigenvalue sum over an outer stretch [a, b].

    Uses exact antiderivatives of the splined table quantities, which an
    adaptive rule would merely reconstruct at far greater cost because
    the spline's higher derivatives jump at every knot.
    """
    n1, n2 = table.norms[0], table.norms[1]
    sq = math.sqrt(hbar)
    bint = table.b_pair_integral(a, b)
    val = table.beta_integral(0, a, b) + table.beta_integral(1, a, b)
    val += sq * (bint[0, 0].real / n1 + bint[1, 1].real / n2)
    val += hbar * (table.spect_integral(0, a, b) + table.spect_integral(1, a, b))
    return val


def _outer_diff_integral(data: CrossingData, table: ModeTable, hbar: float, a: float, b: float) -> float:
    """Integral of the perturbed eigenvalue difference over an outer stretch."""
    n1, n2 = table.norms[0], table.norms[1]
    sq = math.sqrt(hbar)
    bint = table.b_pair_integral(a, b)
    val = table.beta_integral(0, a, b) - table.beta_integral(1, a, b)
    val += sq * (bint[0, 0].real / n1 - bint[1, 1].real / n2)
    val += hbar * (
        table.pair_cross_integral(a, b)
        + table.spect_integral(0, a, b)
        - table.spect_integral(1, a, b)
    )
    return val


def phase_integral(
    data: CrossingData,
    table: ModeTable,
    j: int,
    side: int,
    hbar: float,
    x: float,
    gamma_switch: float = GAMMA_SWITCH,
) -> complex:
    """Accumulated phase exponent of mode j at x on the given side.

    Returns P such that the mode is phi_j(x) |N_j|^(-1/2) e^P.  The sum
    integral is anchored at the shifted coincidence x_star - sqrt(hbar) b,
    the difference integral at lower_limit(data, side, hbar), and the
    conversion phase at x_star.  Inside the switch radius the inner
    closed forms are used; outside, they cover the core and spline
    antiderivatives of the outer expansion cover the rest.
    """
    if j not in (0, 1):
        raise ConfigError("phase_integral applies to the crossing pair, j in {0, 1}")
    if side not in (-1, 1):
        raise ConfigError("side must be -1 or +1")
    if (x - data.x_star) * side <= 0:
        raise ValidityError(f"x = {x:.6g} is not on side {side:+d} of x_star = {data.x_star:.6g}")
    sq = math.sqrt(hbar)
    x_c = data.x_star - sq * data.b_shift
    r_sw = hbar ** (0.5 - gamma_switch)
    l_s = lower_limit(data, side, hbar)
    if max(abs(x_c - data.x_star), abs(l_s - data.x_star)) > 0.9 * r_sw:
        raise ValidityError(
            "shift or turning point exceeds the inner switch radius; hbar too large for gamma_switch"
        )

    if abs(x - data.x_star) <= r_sw:
        sum_int = _inner_sum_integral(data, hbar, x_c, x)
        diff_int = -2.0 * (
            _diff_antiderivative(data, hbar, x - x_c) - _diff_antiderivative(data, hbar, l_s - x_c)
        )
    else:
        x_sw = data.x_star + side * r_sw
        sum_int = _inner_sum_integral(data, hbar, x_c, x_sw)
        sum_int += _outer_sum_integral(data, table, hbar, x_sw, x)
        diff_int = -2.0 * (
            _diff_antiderivative(data, hbar, x_sw - x_c) - _diff_antiderivative(data, hbar, l_s - x_c)
        )
        diff_int += _outer_diff_integral(data, table, hbar, x_sw, x)

    s_j = 1.0 if j == 0 else -1.0
    berry = table.im_s_integral(j, data.x_star, x)
    return 0.5j / hbar * (sum_int + s_j * diff_int) - 1j * berry


def leading_mode(
    data: CrossingData,
    table: ModeTable,
    j: int,
    side: int,
    hbar: float,
    x: float,
    gamma_switch: float = GAMMA_SWITCH,
) -> np.ndarray:
    """Leading canonical mode vector of branch j at x.

    Raises ValidityError inside the exclusion radius around x_star,
    where the construction degenerates.
    """
    if abs(x - data.x_star) < exclusion_radius(data, hbar):
        raise ValidityError(
            f"x = {x:.6g} lies inside the exclusion radius "
            f"{exclusion_radius(data, hbar):.3e} around x_star = {data.x_star:.6g}"
        )
    p = phase_integral(data, table, j, side, hbar, x, gamma_switch=gamma_switch)
    nj = abs(table.norms[j])
    return table.mode(j, x) / math.sqrt(nj) * cmath.exp(p)


def rearranged_outer(data: CrossingData, j: int, side: int, tau: float, hbar: float) -> np.ndarray:
    """Leading mode re-expanded in the stretched variable tau.

    Valid in the matching zone 1 << |tau| << hbar^(-1/2); the result is
    a common phase times |sqrt(2Q) tau|^(-+nu) e^(-+ i Q (tau+b)^2 / 2)
    acting on the frozen pair vector at x_star.
    """
    if j not in (0, 1):
        raise ConfigError("rearranged_outer applies to the crossing pair, j in {0, 1}")
    if tau * side <= 0:
        raise ValidityError(f"tau = {tau:.6g} is not on side {side:+d}")
    sq = math.sqrt(hbar)
    u = tau + data.b_shift
    common = cmath.exp(
        1j / sq * (data.beta0 * u + sq * (data.avg_b * u + 0.5 * data.avg_slope * (tau * tau - data.b_shift ** 2)))
    )
    s_j = 1.0 if j == 0 else -1.0
    amp = cmath.exp(s_j * 1j * data.zeta)
    amp *= cmath.exp(-s_j * data.nu * math.log(abs(math.sqrt(2.0 * data.q_slope) * tau)))
    amp *= cmath.exp(-s_j * 0.5j * data.q_slope * u * u)
    phi = data.frame0.modes[:, j]
    return common * amp * phi / math.sqrt(abs(data.frame0.norms[j]))


@dataclass
class AdiabaticMode:
    """Sampled adiabatic mode of one branch on one side of the crossing."""

    mode_index: int
    side: int
    hbar: float
    lower_limit: float
    phase_samples: dict = field(default_factory=dict)
    amplitude_samples: dict = field(default_factory=dict)
    order: int = 0


def sample_mode(
    data: CrossingData,
    table: ModeTable,
    j: int,
    side: int,
    hbar: float,
    xs,
    order: int = 0,
) -> AdiabaticMode:
    """Sample phase exponents and amplitude vectors of mode j on a grid.

    order = 0 records the bare tracked eigenvector; order = 1 adds the
    sqrt(hbar) amplitude correction Phi^(1).
    """
    if order not in (0, 1):
        raise ConfigError("sample_mode supports order 0 or 1")
    am = AdiabaticMode(
        mode_index=j,
        side=side,
        hbar=hbar,
        lower_limit=lower_limit(data, side, hbar),
        order=order,
    )
    ht = higher_terms(data, table, j, n_max=1) if order == 1 else None
    for x in xs:
        p = phase_integral(data, table, j, side, hbar, x)
        amp = table.mode(j, x) / math.sqrt(abs(table.norms[j]))
        if order == 1:
            amp = amp + math.sqrt(hbar) * ht[0][1](x) / math.sqrt(abs(table.norms[j]))
        am.phase_samples[float(x)] = p
        am.amplitude_samples[float(x)] = amp
    return am


def higher_terms(data: CrossingData, table: ModeTable, j: int, n_max: int = 3) -> list:
    """Power-series corrections (theta^(n), Phi^(n)) for branch j, n = 1..n_max.

    Each entry is a pair of callables (theta(x) -> complex,
    phi(x) -> vector) backed by per-side splines on the table grid,
    excluding a small collar around x_star where the terms are
    singular.  The partner-mode coefficient uses its closed form; the
    orthogonal remainder solves a bordered system constrained to be
    metric-orthogonal to the pair.  An ill-conditioned bordered matrix
    raises SpectralGapError.

    n_max is capped at 3: beyond that the construction would need
    higher Taylor data than the model carries.
    """
    if j not in (0, 1):
        raise ConfigError("higher_terms applies to the crossing pair, j in {0, 1}")
    if not 1 <= n_max <= 3:
        raise ConfigError("n_max must be between 1 and 3")
    k = 1 - j
    xs = table.xs
    step = float(np.median(np.diff(xs)))
    collar = 3.0 * step
    model = table.model
    g = model.metric
    dim = model.dim
    nj = table.norms[j]
    nk = table.norms[k]

    sides = {}
    for sname, mask in (
        ("left", xs < data.x_star - collar),
        ("right", xs > data.x_star + collar),
    ):
        sx = xs[mask]
        if sx.size < 8:
            continue
        idx = np.flatnonzero(mask)
        npts = sx.size
        phis = np.empty((npts, dim), dtype=complex)
        phks = np.empty((npts, dim), dtype=complex)
        betaj = np.empty(npts)
        betak = np.empty(npts)
        for a, i in enumerate(idx):
            f = table.frames[i]
            phis[a] = f.modes[:, j]
            phks[a] = f.modes[:, k]
            betaj[a] = f.betas[j].real
            betak[a] = f.betas[k].real

        phi_hist = [phis]
        theta_hist = []
        c_hist = []
        phi_spl = [CubicSpline(sx, phis)]
        theta_spl = []
        for n in range(1, n_max + 1):
            prev = phi_hist[n - 1]
            dprev2 = phi_spl[n - 2](sx, 1) if n >= 2 else np.zeros_like(phis)
            theta_n = np.empty(npts, dtype=complex)
            c_n = np.empty(npts, dtype=complex)
            phi_n = np.empty((npts, dim), dtype=complex)
            for a, i in enumerate(idx):
                x = sx[a]
                f = table.frames[i]
                bm = model.b_at(x)
                km = model.k_at(x)
                pj = phis[a]
                pk = phks[a]
                b_prev = bm @ prev[a]
                gd_prev = g @ dprev2[a]
                theta_n[a] = (np.vdot(pj, b_prev) + 1j * np.vdot(pj, gd_prev)) / nj
                conv = sum(theta_hist[m - 1][a] * c_hist[n - m - 1][a] for m in range(1, n))
                c_n[a] = (
                    np.vdot(pk, b_prev) + 1j * np.vdot(pk, gd_prev) - nk * conv
                ) / ((betaj[a] - betak[a]) * nk)
                rhs_seq = np.zeros(dim, dtype=complex)
                for m in range(1, n + 1):
                    tm = theta_n[a] if m == n else theta_hist[m - 1][a]
                    rhs_seq += tm * phi_hist[n - m][a]
                rhs = g @ rhs_seq - b_prev - 1j * gd_prev
                bord = np.zeros((dim + 2, dim + 2), dtype=complex)
                bord[:dim, :dim] = km - betaj[a] * g
                bord[:dim, dim] = g @ pj
                bord[:dim, dim + 1] = g @ pk
                bord[dim, :dim] = pj.conj() @ g
                bord[dim + 1, :dim] = pk.conj() @ g
                full_rhs = np.concatenate([rhs, [0.0, 0.0]])
                cond = np.linalg.cond(bord)
                if cond > 1e12:
                    raise SpectralGapError(
                        f"bordered system ill-conditioned (cond = {cond:.2e}) at x = {x:.6g}"
                    )
                sol = np.linalg.solve(bord, full_rhs)
                phi_n[a] = c_n[a] * pk + sol[:dim]
            theta_hist.append(theta_n)
            c_hist.append(c_n)
            phi_hist.append(phi_n)
            phi_spl.append(CubicSpline(sx, phi_n))
            theta_spl.append(CubicSpline(sx, theta_n))
        sides[sname] = (sx, theta_spl, phi_spl[1:])

    if not sides:
        raise ConfigError("table grid too coarse to build higher terms")

    def make_pair(n: int):
        def theta_fn(x: float) -> complex:
            return complex(_side_eval(sides, data.x_star, collar, x, 0, n))

        def phi_fn(x: float) -> np.ndarray:
            return np.asarray(_side_eval(sides, data.x_star, collar, x, 1, n))

        return theta_fn, phi_fn

    return [make_pair(n) for n in range(1, n_max + 1)]


def _side_eval(sides: dict, x_star: float, collar: float, x: float, which: int, n: int):
    if abs(x - x_star) <= collar:
        raise ValidityError(f"higher terms are singular within {collar:.3g} of x_star")
    name = "left" if x < x_star else "right"
    if name not in sides:
        raise ValidityError(f"no {name}-side grid available for higher terms")
    sx, theta_spl, phi_spl = sides[name]
    if not sx[0] <= x <= sx[-1]:
        raise ValidityError(f"x = {x:.6g} outside the tabulated {name}-side range")
    spl = theta_spl[n - 1] if which == 0 else phi_spl[n - 1]
    return spl(x)


def singularity_estimate(
    data: CrossingData,
    table: ModeTable,
    j: int = 0,
    n_max: int = 3,
    side: int = 1,
    n_points: int = 12,
) -> dict:
    """Measured blow-up rates of the higher terms towards the crossing.

    Fits log|theta^(n)| and log|Phi^(n)| against log|x - x_star| on a
    geometric ladder of distances and reports the slopes next to the
    expected -(n-1) and -n.  Quantities that vanish identically are
    reported as such and skipped.  A non-finite fit raises
    PrecisionError.
    """
    terms = higher_terms(data, table, j, n_max=n_max)
    a, b = table.model.interval
    span = (b - data.x_star) if side > 0 else (data.x_star - a)
    dists = np.geomspace(0.04 * span, 0.5 * span, n_points)
    out: dict = {"j": j, "side": side, "terms": []}
    for n, (theta_fn, phi_fn) in enumerate(terms, start=1):
        tvals = np.array([abs(theta_fn(data.x_star + side * d)) for d in dists])
        pvals = np.array([np.linalg.norm(phi_fn(data.x_star + side * d)) for d in dists])
        entry: dict = {"n": n, "theta_expected": -(n - 1), "phi_expected": -n}
        for key, vals, expected in (("theta", tvals, -(n - 1)), ("phi", pvals, -n)):
            if vals.max() < 1e-12:
                entry[f"{key}_slope"] = None
                entry[f"{key}_vanishes"] = True
                continue
            logs = np.log(vals)
            if not np.all(np.isfinite(logs)):
                raise PrecisionError(f"singularity fit failed for {key}^({n})")
            slope = float(np.polyfit(np.log(dists), logs, 1)[0])
            entry[f"{key}_slope"] = slope
            entry[f"{key}_vanishes"] = False
        out["terms"].append(entry)
    return out
