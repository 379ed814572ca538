"""Local analysis of a two-fold eigenvalue coincidence.

Locates the point x_star where two tracked eigenvalue branches of
K(x) phi = beta G phi meet, extracts the canonical local parameters
(half slope-difference Q, shift b, coupling p, metric product w, the
transition exponent nu) from the Taylor data of K and B there, and
fixes the pair phases so that the residual coupling phase vanishes.
The crossing is "avoided" when the pair carries equal metric signs
(w = +1) and "unavoidable" for opposite signs (w = -1), where the
branches of the perturbed problem cross the real axis instead of
repelling.

Perturbed eigenvalue branches are provided in two forms: an outer
expansion in powers of sqrt(hbar) built from tracked quantities, valid
away from the crossing, and an inner two-level reduction in the
stretched variable tau = (x - x_star)/sqrt(hbar), valid in a window
around it.  eig_matching_check verifies they agree on the overlap.
"""

from __future__ import annotations

import cmath
import math
from collections import namedtuple
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import (
    DegenerateSlopeError,
    DegeneracyError,
    MetricDegenerateError,
    MultipleCrossingsError,
    NoCrossingError,
    PrecisionError,
    ValidityError,
)
from .pencil import (
    CLUSTER_REL_TOL,
    METRIC_FLOOR,
    ModeTable,
    PencilModel,
    SpectralFrame,
    frame_at,
    g_inner,
    track_modes,
)

AVOIDED = "avoided"
UNAVOIDABLE = "unavoidable"

GAMMA_DEFAULT = 0.2
GAMMA_PRIME_DEFAULT = 0.05


@dataclass
class CrossingData:
    """Canonical parameters of one simple two-fold crossing.

    Geometry: Q > 0 is half the slope difference of the two branches,
    b the sqrt(hbar)-scaled shift of the perturbed coincidence, p >= 0
    the scaled off-diagonal coupling, w in {-1, +1} the product of the
    metric signs, and nu = i w p^2 / (2 Q) the transition exponent.
    kappa_plus and kappa_minus are the stretched positions of the
    perturbed branch coincidences: position = x_star + sqrt(hbar) *
    kappa.  frame0 is the gauge-fixed eigenframe at x_star with the
    crossing pair in columns 0 and 1; theta_a is the residual coupling
    phase after gauge fixing (zero up to round-off) and theta_a_raw
    the phase that was removed.
    """

    x_star: float
    taylor_k: tuple
    taylor_b: tuple
    beta0: float
    q_slope: float
    b_shift: float
    p_sq: float
    w: int
    nu: complex
    theta_a: float
    theta_a_raw: float
    sigma: complex
    zeta: float
    kappa_plus: complex
    kappa_minus: complex
    classification: str
    frame0: SpectralFrame
    avg_b: float
    avg_slope: float

    @property
    def p(self) -> float:
        return math.sqrt(self.p_sq)

    @property
    def b12(self) -> complex:
        """Gauge-fixed coupling element (phi_1, B(x_star) phi_2)."""
        sub = self.frame0.modes[:, :2]
        el = sub.conj().T @ self.taylor_b[0] @ sub
        return complex(el[0, 1])


def _scan_frames(model: PencilModel, n_scan: int) -> tuple[np.ndarray, list[SpectralFrame]]:
    a, b = model.interval
    xs = np.linspace(a, b, n_scan)
    frames = [frame_at(model, xs[0])]
    for x in xs[1:]:
        frames.append(track_modes(frames[-1], frame_at(model, x), model.metric))
    return xs, frames


def locate_degeneracy(model: PencilModel, n_scan: int = 801) -> float:
    """Find the unique point where two tracked branches coincide.

    Scans the interval, counts sign changes of every branch-pair
    difference, and refines the single admissible one by bracketed
    root finding on the tracked difference to 1e-12.

    Raises
    ------
    NoCrossingError
        If no difference changes sign on the interval.
    MultipleCrossingsError
        If more than one sign change is found (across all pairs).
    """
    xs, frames = _scan_frames(model, n_scan)
    dim = model.dim
    betas = np.array([f.betas.real for f in frames])
    hits: list[tuple[int, int, int]] = []
    for j in range(dim):
        for k in range(j + 1, dim):
            d = betas[:, j] - betas[:, k]
            s = np.sign(d)
            for i in range(len(xs) - 1):
                if s[i] == 0 or s[i] * s[i + 1] < 0:
                    hits.append((i, j, k))
    if not hits:
        raise NoCrossingError(
            f"no eigenvalue coincidence on [{model.interval[0]}, {model.interval[1]}]"
        )
    if len(hits) > 1:
        pts = ", ".join(f"x ~ {xs[i]:.4g} (branches {j}, {k})" for i, j, k in hits)
        raise MultipleCrossingsError(f"expected one coincidence, found {len(hits)}: {pts}")
    i0, j, k = hits[0]

    def tracked_diff(x: float) -> float:
        base = frames[i0] if abs(x - xs[i0]) <= abs(x - xs[i0 + 1]) else frames[i0 + 1]
        f = track_modes(base, frame_at(model, x), model.metric)
        return float(f.betas[j].real - f.betas[k].real)

    lo, hi = xs[i0], xs[i0 + 1]
    if tracked_diff(lo) == 0.0:
        return float(lo)
    x_star = brentq(tracked_diff, lo, hi, xtol=1e-13, rtol=8.9e-16)
    return float(x_star)


def gauge_fix(frame: SpectralFrame, b_matrix: np.ndarray, pair: tuple[int, int] = (0, 1)) -> SpectralFrame:
    """Rotate the pair phases so the residual coupling phase vanishes.

    Applies opposite half-phases to the two pair modes, which leaves
    the metric norms untouched and removes arg(B_12 / N_1) plus the
    metric offset (pi/4)(1 - w) from the coupling element.  A common
    phase is then applied to both pair modes to pin the largest
    component of the first one real positive, making the frame
    deterministic.  If the coupling element vanishes the input frame
    is returned unchanged.
    """
    i, j = pair
    phi1 = frame.modes[:, i]
    phi2 = frame.modes[:, j]
    b12 = complex(np.vdot(phi1, b_matrix @ phi2))
    modes = frame.modes.copy()
    if b12 != 0.0:
        w = int(round(frame.norms[i] * frame.norms[j]))
        theta = cmath.phase(b12 / frame.norms[i]) + 0.25 * math.pi * (1 - w)
        modes[:, i] = phi1 * cmath.exp(0.5j * theta)
        modes[:, j] = phi2 * cmath.exp(-0.5j * theta)
    big = int(np.argmax(np.abs(modes[:, i])))
    alpha = np.angle(modes[big, i])
    modes[:, i] *= np.exp(-1j * alpha)
    modes[:, j] *= np.exp(-1j * alpha)
    return SpectralFrame(x=frame.x, betas=frame.betas.copy(), modes=modes, norms=frame.norms.copy())


def crossing_parameters(model: PencilModel, x_star: float | None = None) -> CrossingData:
    """Canonical crossing parameters from local Taylor data.

    Solves the pencil at x_star, restricts the slope matrix K'(x_star)
    to the degenerate pair, orders the pair by slope so that Q > 0,
    gauge-fixes the phases, and assembles the scaled parameters.

    Raises
    ------
    DegeneracyError
        If the coincidence at x_star is not exactly two-fold.
    DegenerateSlopeError
        If the two branches meet with equal (or non-real) slopes.
    MetricDegenerateError
        If a pair mode has numerically zero metric norm.
    """
    if x_star is None:
        x_star = locate_degeneracy(model)
    k0 = model.k_at(x_star)
    k1 = model.k_prime_at(x_star)
    k2 = 0.5 * model.k_second_at(x_star)
    b0 = model.b_at(x_star)
    db = [m * c for m, c in enumerate(model.b_coeffs)][1:]
    b1 = np.zeros_like(b0)
    if db:
        acc = np.zeros_like(b0)
        for c in reversed(db):
            acc = acc * x_star + c
        b1 = acc

    frame = frame_at(model, x_star)
    scale = max(1.0, float(np.abs(frame.betas).max()))
    order = np.argsort(frame.betas.real)
    vals = frame.betas.real[order]
    gaps = np.diff(vals)
    close = gaps <= CLUSTER_REL_TOL * scale * 10.0
    idx = np.flatnonzero(close)
    if idx.size == 0:
        raise NoCrossingError(f"no degenerate pair at x = {x_star:.8g}")
    if idx.size > 1:
        raise DegeneracyError(
            f"coincidence at x = {x_star:.8g} involves more than two branches"
        )
    pair_idx = [int(order[idx[0]]), int(order[idx[0] + 1])]
    v = frame.modes[:, pair_idx]
    n_cluster = frame.norms[pair_idx]
    if np.any(n_cluster == 0):
        raise MetricDegenerateError("crossing pair contains a metric-isotropic mode")

    # slope sub-pencil on the degenerate pair
    a2 = v.conj().T @ k1 @ v
    m2 = np.diag(n_cluster)
    lam, cvec = np.linalg.eig(np.linalg.solve(m2, a2))
    if np.any(np.abs(lam.imag) > 1e-9 * max(1.0, np.abs(lam).max())):
        raise DegenerateSlopeError("branch slopes at the crossing are not real")
    lam = lam.real
    sl_order = np.argsort(lam)
    lam = lam[sl_order]
    cvec = cvec[:, sl_order]
    slope_scale = max(1.0, float(np.abs(lam).max()), float(np.linalg.norm(k1)))
    if lam[1] - lam[0] < 1e-8 * slope_scale:
        raise DegenerateSlopeError(
            f"slope difference {lam[1] - lam[0]:.3e} below threshold at x = {x_star:.8g}"
        )

    pair_modes = []
    pair_norms = []
    for col in range(2):
        u = v @ cvec[:, col]
        nn = float(np.real(np.vdot(u, model.metric @ u)))
        if abs(nn) < METRIC_FLOOR * float(np.vdot(u, u).real):
            raise MetricDegenerateError("pair mode has vanishing metric norm after slope split")
        u = u / math.sqrt(abs(nn))
        pair_modes.append(u)
        pair_norms.append(math.copysign(1.0, nn))

    spect_cols = [c for c in range(frame.dim) if c not in pair_idx]
    spect_order = sorted(spect_cols, key=lambda c: frame.betas[c].real)
    cols = pair_modes + [frame.modes[:, c] for c in spect_order]
    betas0 = [frame.betas[pair_idx[0]].real] * 2 + [frame.betas[c].real for c in spect_order]
    norms0 = pair_norms + [float(frame.norms[c]) for c in spect_order]
    modes0 = np.column_stack(cols)
    for c in range(2, modes0.shape[1]):
        big = int(np.argmax(np.abs(modes0[:, c])))
        modes0[:, c] *= np.exp(-1j * np.angle(modes0[big, c]))
    beta0 = float(np.mean([frame.betas[c].real for c in pair_idx]))
    raw_frame = SpectralFrame(
        x=float(x_star),
        betas=np.asarray(betas0, dtype=complex),
        modes=modes0,
        norms=np.asarray(norms0),
    )

    frame0 = gauge_fix(raw_frame, b0, pair=(0, 1))
    phi1 = frame0.modes[:, 0]
    phi2 = frame0.modes[:, 1]
    n1, n2 = frame0.norms[0], frame0.norms[1]
    w = int(round(n1 * n2))

    b12_raw = complex(np.vdot(raw_frame.modes[:, 0], b0 @ raw_frame.modes[:, 1]))
    theta_a_raw = 0.0
    if b12_raw != 0.0:
        theta_a_raw = cmath.phase(b12_raw / n1) + 0.25 * math.pi * (1 - w)

    b12 = complex(np.vdot(phi1, b0 @ phi2))
    b21 = complex(np.vdot(phi2, b0 @ phi1))
    b11 = float(np.real(np.vdot(phi1, b0 @ phi1)))
    b22 = float(np.real(np.vdot(phi2, b0 @ phi2)))
    k1_11 = float(np.real(np.vdot(phi1, k1 @ phi1)))
    k1_22 = float(np.real(np.vdot(phi2, k1 @ phi2)))

    q_slope = 0.5 * (k1_22 / n2 - k1_11 / n1)
    if q_slope <= 0:
        raise DegenerateSlopeError(f"nonpositive slope half-difference Q = {q_slope:.3e}")
    b_shift = (b22 / n2 - b11 / n1) / (2.0 * q_slope)
    p_sq = abs(b12) ** 2 / abs(n1 * n2)
    nu = 1j * b12 * b21 / (2.0 * q_slope * n1 * n2)
    theta_a = 0.0
    if b12 != 0.0:
        theta_a = cmath.phase(b12 / n1) + 0.25 * math.pi * (1 - w)
        if abs(theta_a) > 1e-8:
            raise PrecisionError(f"residual coupling phase {theta_a:.3e} after gauge fixing")
    sigma = cmath.exp(-0.25j * math.pi) * math.sqrt(2.0 * q_slope)
    nu_abs = abs(nu)
    zeta = 0.0 if nu_abs == 0.0 else -0.5 * w * nu_abs * (1.0 - math.log(nu_abs))
    p = math.sqrt(p_sq)
    if w == 1:
        kappa_plus = complex(-b_shift, p / q_slope)
        kappa_minus = complex(-b_shift, -p / q_slope)
    else:
        kappa_plus = complex(-b_shift + p / q_slope, 0.0)
        kappa_minus = complex(-b_shift - p / q_slope, 0.0)

    avg_b = 0.5 * (b11 / n1 + b22 / n2)
    avg_slope = 0.5 * (k1_11 / n1 + k1_22 / n2)

    return CrossingData(
        x_star=float(x_star),
        taylor_k=(k0, k1, k2),
        taylor_b=(b0, b1),
        beta0=beta0,
        q_slope=q_slope,
        b_shift=float(b_shift),
        p_sq=float(p_sq),
        w=w,
        nu=nu,
        theta_a=float(theta_a),
        theta_a_raw=float(theta_a_raw),
        sigma=sigma,
        zeta=float(zeta),
        kappa_plus=kappa_plus,
        kappa_minus=kappa_minus,
        classification=AVOIDED if w == 1 else UNAVOIDABLE,
        frame0=frame0,
        avg_b=float(avg_b),
        avg_slope=float(avg_slope),
    )


def build_table(model: PencilModel, data: CrossingData, n_points: int = 1601) -> ModeTable:
    """Tracked mode table anchored at the gauge-fixed crossing frame."""
    return ModeTable(model, data.frame0, n_points=n_points)


def perturbed_eigs_outer(
    data: CrossingData,
    table: ModeTable,
    x: float,
    hbar: float,
    gamma: float = GAMMA_DEFAULT,
) -> tuple[float, float]:
    """Outer expansion of the perturbed pair eigenvalues at x.

    beta_hat_j = beta_j + sqrt(hbar) B_jj / N_j + hbar (pair + spectator
    second-order shifts).  Valid for |x - x_star| >= hbar^(1/2 - gamma);
    closer requests raise ValidityError because the expansion loses its
    ordering there.
    """
    if abs(x - data.x_star) < hbar ** (0.5 - gamma) * (1.0 - 1e-12):
        raise ValidityError(
            f"outer expansion requested at |x - x_star| = {abs(x - data.x_star):.3e}, "
            f"inside the exclusion radius {hbar ** (0.5 - gamma):.3e}"
        )
    bel = table.b_pair(x)
    n1, n2 = table.norms[0], table.norms[1]
    beta = [float(table.beta(0, x)), float(table.beta(1, x))]
    cross = (bel[0, 1] * bel[1, 0]).real
    out = []
    for j, (nj, other) in enumerate(((n1, 1), (n2, 0))):
        dgap = beta[j] - beta[other]
        pair_term = cross / (dgap * n1 * n2)
        val = (
            beta[j]
            + math.sqrt(hbar) * bel[j, j].real / nj
            + hbar * (pair_term + float(table.spect_shift(j, x)))
        )
        out.append(val)
    return out[0], out[1]


InnerEigs = namedtuple("InnerEigs", ["beta1", "beta2", "forbidden"])


def perturbed_eigs_inner(data: CrossingData, tau: float, hbar: float) -> InnerEigs:
    """Two-level reduction of the perturbed eigenvalues at stretched tau.

    Returns beta0 + sqrt(hbar) (avg + tau-linear) +- sqrt(hbar) *
    sqrt(Q^2 (tau + b)^2 + p^2 w).  For w = -1 the radicand is negative
    inside |tau + b| < p/Q; the values are then a complex-conjugate
    pair and the forbidden flag is set.
    """
    u = tau + data.b_shift
    radicand = data.q_slope ** 2 * u * u + data.p_sq * data.w
    root = cmath.sqrt(complex(radicand))
    center = data.beta0 + math.sqrt(hbar) * (data.avg_b + data.avg_slope * tau)
    b1 = center + math.sqrt(hbar) * root
    b2 = center - math.sqrt(hbar) * root
    forbidden = radicand < 0
    if not forbidden:
        return InnerEigs(float(b1.real), float(b2.real), False)
    return InnerEigs(complex(b1), complex(b2), True)


def eig_matching_check(
    data: CrossingData,
    table: ModeTable,
    hbar: float,
    gamma: float = GAMMA_DEFAULT,
) -> dict:
    """Consistency of the outer and inner eigenvalue expansions.

    Evaluates both at tau = +-hbar^(-gamma) for hbar and hbar/10,
    accounting for the label inversion of the inner branches on the
    right of the crossing, and fits the decay exponent of the
    mismatch.  Raises PrecisionError when the mismatch fails to decay.
    """
    report: dict = {"hbar": hbar, "gamma": gamma, "points": []}
    errs = {}
    for h in (hbar, hbar / 10.0):
        worst = 0.0
        for sgn in (-1.0, 1.0):
            tau = sgn * h ** (-gamma)
            x = data.x_star + math.sqrt(h) * tau
            outer = perturbed_eigs_outer(data, table, x, h, gamma=gamma)
            inner = perturbed_eigs_inner(data, tau, h)
            if sgn > 0:
                matched = (inner.beta2, inner.beta1)
            else:
                matched = (inner.beta1, inner.beta2)
            m = max(abs(outer[0] - matched[0]), abs(outer[1] - matched[1]))
            worst = max(worst, float(m))
            report["points"].append(
                {"hbar": h, "tau": tau, "outer": outer, "inner": matched, "mismatch": float(m)}
            )
        errs[h] = worst
    h1, h2 = hbar, hbar / 10.0
    if errs[h1] < 1e-14 and errs[h2] < 1e-14:
        exponent = float("inf")
    else:
        exponent = math.log(max(errs[h1], 1e-300) / max(errs[h2], 1e-300)) / math.log(h1 / h2)
    report["errors"] = errs
    report["exponent"] = exponent
    report["inversion_applied"] = True
    if exponent <= 0.05:
        raise PrecisionError(
            f"inner/outer eigenvalue mismatch does not decay: exponent {exponent:.3f}"
        )
    return report
