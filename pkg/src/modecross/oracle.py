"""Direct numerical integration and empirical transition matrices.

The evolution equation (K(x) + sqrt(hbar) B(x)) psi = -i hbar G psi'
is integrated as an explicit ODE system with a high-order adaptive
Runge-Kutta scheme; the pairing (psi, G psi) is conserved exactly by
the equation, so its drift measures integrator error.  Projecting the
integrated state onto the canonical modes at endpoints on both sides
of the crossing and repeating for two independent initial modes gives
an empirical transition matrix, the ground truth the closed form is
verified against.

Endpoints sit at max(factor * hbar^(1/2 - gamma), 1.1 * exclusion
radius) from the crossing: far enough out that the neglected
corrections are small, close enough in that the sqrt(hbar) expansions
still order correctly.  The projection basis is configurable; the
default uses eigenvectors of the perturbed pencil K + sqrt(hbar) B at
the endpoint (branch-matched to the tracked frame and normalized to
unit coefficient on the unperturbed mode), which removes the leading
endpoint contamination that bare eigenvectors would leave.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Polynomial
from scipy.integrate import solve_ivp

from .adiabatic import exclusion_radius, phase_integral
from .crossing import CrossingData, build_table, crossing_parameters
from .errors import ConfigError, PrecisionError, ProjectionWarning, TrackingError, ValidityError
from .pencil import ModeTable, PencilModel, g_inner, solve_pencil
from .transition import TransitionMatrix, transition_matrix

TOL_MIN = 1e-12
TOL_MAX = 1e-6
LEAKAGE_BOUND = 0.05


@dataclass
class TrajectoryRecord:
    """One integrated trajectory with flux samples and solver statistics."""

    model: PencilModel
    hbar: float
    tol: float
    xs: np.ndarray
    psis: np.ndarray
    flux: np.ndarray
    stats: dict

    def flux_drift(self) -> float:
        """Largest relative drift of (psi, G psi) along the trajectory."""
        f0 = self.flux[0]
        return float(np.abs(self.flux - f0).max() / max(abs(f0), 1e-12))

    def endpoint(self, side: int) -> tuple[float, np.ndarray]:
        i = -1 if side > 0 else 0
        return float(self.xs[i]), self.psis[i]


def _mean_phase_poly(model: PencilModel) -> Polynomial:
    ginv = np.linalg.inv(model.metric)
    coeffs = []
    for km in model.k_coeffs:
        tr = np.trace(ginv @ km) / model.dim
        coeffs.append(float(tr.real))
    return Polynomial(coeffs)


def integrate(
    model: PencilModel,
    hbar: float,
    x_from: float,
    x_to: float,
    psi0: np.ndarray,
    tol: float = 1e-10,
    n_samples: int = 201,
    strip_mean_phase: bool = False,
) -> TrajectoryRecord:
    """Integrate the evolution equation from x_from to x_to.

    psi' = (i/hbar) G^{-1} (K + sqrt(hbar) B) psi, solved with DOP853
    at rtol = atol = tol.  With strip_mean_phase the mean eigenvalue
    trace is removed inside the solver and restored on the recorded
    samples, which slows the phase rotation without changing the
    physical state.

    Raises ConfigError for tolerances outside [1e-12, 1e-6] and
    PrecisionError when the solver gives up (stiffness; try a larger
    hbar or looser tolerance).
    """
    if not TOL_MIN <= tol <= TOL_MAX:
        raise ConfigError(f"tol = {tol} outside the supported range [{TOL_MIN}, {TOL_MAX}]")
    if x_from == x_to:
        raise ConfigError("empty integration range")
    psi0 = np.asarray(psi0, dtype=complex)
    if psi0.shape != (model.dim,) or not np.any(psi0):
        raise ConfigError("psi0 must be a nonzero vector of the model dimension")

    ginv = np.linalg.inv(model.metric)
    sq = math.sqrt(hbar)
    mu = _mean_phase_poly(model) if strip_mean_phase else None

    def rhs(x: float, y: np.ndarray) -> np.ndarray:
        h = model.k_at(x) + sq * model.b_at(x)
        out = (1j / hbar) * (ginv @ (h @ y))
        if mu is not None:
            out -= (1j / hbar) * mu(x) * y
        return out

    xs = np.linspace(x_from, x_to, n_samples)
    sol = solve_ivp(
        rhs,
        (x_from, x_to),
        psi0,
        method="DOP853",
        t_eval=xs,
        rtol=tol,
        atol=tol,
    )
    if not sol.success:
        raise PrecisionError(
            f"integration failed ({sol.message}); possible stiffness, "
            "consider a larger hbar or looser tolerance"
        )
    psis = sol.y.T.copy()
    if mu is not None:
        anti = mu.integ()
        restore = np.exp(1j / hbar * (anti(xs) - anti(x_from)))
        psis = psis * restore[:, np.newaxis]
    flux = np.einsum("ni,ij,nj->n", psis.conj(), model.metric, psis).real
    stats = {"nfev": int(sol.nfev), "message": str(sol.message), "stripped": bool(strip_mean_phase)}
    return TrajectoryRecord(
        model=model, hbar=hbar, tol=tol, xs=xs, psis=psis, flux=flux, stats=stats
    )


def _basis_vectors(
    data: CrossingData,
    table: ModeTable,
    hbar: float,
    x_e: float,
    side: int,
    basis: str,
) -> np.ndarray:
    """Canonical pair vectors at an endpoint, as columns, phases included."""
    model = table.model
    g = model.metric
    if basis == "order0":
        cols = [table.mode(0, x_e), table.mode(1, x_e)]
    elif basis == "order1":
        bm = model.b_at(x_e)
        sq = math.sqrt(hbar)
        cols = []
        for j in (0, 1):
            vec = table.mode(j, x_e).astype(complex)
            corr = np.zeros_like(vec)
            bj = float(table.beta(j, x_e))
            phi_j = table.mode(j, x_e)
            for m in range(model.dim):
                if m == j:
                    continue
                bm_el = complex(np.vdot(table.mode(m, x_e), bm @ phi_j))
                den = (bj - float(table.beta(m, x_e))) * table.norms[m]
                corr += bm_el / den * table.mode(m, x_e)
            cols.append(vec + sq * corr)
    elif basis == "exact":
        h = model.k_at(x_e) + math.sqrt(hbar) * model.b_at(x_e)
        frame_e = solve_pencil(h, g, x=x_e)
        cols = []
        taken = set()
        for j in (0, 1):
            phi_j = table.mode(j, x_e)
            ovs = np.array(
                [abs(g_inner(phi_j, frame_e.modes[:, m], g)) for m in range(frame_e.dim)]
            )
            best = int(np.argmax(ovs))
            if best in taken:
                raise TrackingError(f"branch matching collision at endpoint x = {x_e:.6g}")
            taken.add(best)
            v = frame_e.modes[:, best]
            coeff = g_inner(phi_j, v, g) / table.norms[j]
            cols.append(v / coeff)
    else:
        raise ConfigError(f"unknown projection basis {basis!r}")
    out = np.empty((table.dim, 2), dtype=complex)
    for j in (0, 1):
        p = phase_integral(data, table, j, side, hbar, x_e)
        out[:, j] = cols[j] * np.exp(p)
    return out


def project_onto_modes(
    record: TrajectoryRecord,
    data: CrossingData,
    table: ModeTable,
    side: int,
    basis: str = "exact",
    leakage_bound: float = LEAKAGE_BOUND,
) -> tuple[complex, complex, float]:
    """Coefficients of the endpoint state on the canonical pair modes.

    Solves the 2x2 metric Gram system, which reduces to biorthogonal
    division when the basis is exactly G-orthogonal.  The returned
    residual is the relative metric-complement norm; exceeding
    leakage_bound emits ProjectionWarning (spectator leakage or
    endpoints too close in).
    """
    x_e, psi = record.endpoint(side)
    vecs = _basis_vectors(data, table, record.hbar, x_e, side, basis)
    g = record.model.metric
    gram = vecs.conj().T @ g @ vecs
    rhs = vecs.conj().T @ g @ psi
    k = np.linalg.solve(gram, rhs)
    resid = float(np.linalg.norm(psi - vecs @ k) / np.linalg.norm(psi))
    if resid > leakage_bound:
        warnings.warn(
            f"projection residual {resid:.3g} exceeds {leakage_bound} at x = {x_e:.6g}",
            ProjectionWarning,
            stacklevel=2,
        )
    return complex(k[0]), complex(k[1]), resid


@dataclass
class EmpiricalTransition:
    """Transition matrix measured by direct integration."""

    hbar: float
    matrix: np.ndarray
    residuals: tuple
    basis: str
    flux_residuals: tuple = ()

    def reflection(self) -> complex:
        return complex(-self.matrix[1, 0] / self.matrix[1, 1])

    def tunneling(self) -> complex:
        det = self.matrix[0, 0] * self.matrix[1, 1] - self.matrix[0, 1] * self.matrix[1, 0]
        return complex(det / self.matrix[1, 1])


def empirical_transition(
    model: PencilModel,
    data: CrossingData,
    table: ModeTable,
    hbar: float,
    tol: float = 1e-10,
    gamma: float = 0.2,
    endpoint_factor: float = 1.0,
    basis: str = "exact",
    strip_mean_phase: bool = False,
) -> EmpiricalTransition:
    """Measure the transition matrix by integrating the two canonical modes.

    Endpoints are placed symmetrically in scale on both sides of the
    crossing, clamped to the model interval; an interval too short to
    clear the exclusion radius raises ValidityError.
    """
    a, b = model.interval
    excl = exclusion_radius(data, hbar)
    r_nominal = max(endpoint_factor * hbar ** (0.5 - gamma), 1.1 * excl)
    ends = {}
    for side, dist in ((-1, data.x_star - a), (1, b - data.x_star)):
        r = min(r_nominal, 0.98 * dist)
        if r < 1.05 * excl:
            raise ValidityError(
                f"interval side {side:+d} too short for hbar = {hbar}: "
                f"usable radius {r:.3g} vs exclusion {excl:.3g}"
            )
        ends[side] = data.x_star + side * r
    x_l, x_r = ends[-1], ends[1]

    start = _basis_vectors(data, table, hbar, x_l, -1, basis)
    matrix = np.empty((2, 2), dtype=complex)
    residuals = []
    for col in (0, 1):
        rec = integrate(
            model, hbar, x_l, x_r, start[:, col], tol=tol, strip_mean_phase=strip_mean_phase
        )
        k1, k2, resid = project_onto_modes(rec, data, table, 1, basis=basis)
        matrix[0, col] = k1
        matrix[1, col] = k2
        residuals.append(resid)

    n1, n2 = float(table.norms[0]), float(table.norms[1])
    fr = []
    for col, weight in ((0, n1), (1, n2)):
        a = abs(matrix[0, col]) ** 2 * n1
        b = abs(matrix[1, col]) ** 2 * n2
        scale = max(abs(a), abs(b), abs(weight), 1e-300)
        fr.append(abs(a + b - weight) / scale)
    return EmpiricalTransition(
        hbar=hbar,
        matrix=matrix,
        residuals=tuple(residuals),
        basis=basis,
        flux_residuals=tuple(fr),
    )


@dataclass
class SweepResult:
    """Empirical-vs-closed-form comparison across a ladder of hbar values."""

    rows: list
    slope: float | None
    monotone: bool
    skipped: bool
    reference: TransitionMatrix
    data: CrossingData
    table: ModeTable = field(repr=False, default=None)


def hbar_sweep(
    model: PencilModel,
    hbars,
    tol: float = 1e-10,
    gamma: float = 0.2,
    endpoint_factor: float = 1.0,
    basis: str = "exact",
    data: CrossingData | None = None,
    table: ModeTable | None = None,
) -> SweepResult:
    """Errors of the empirical transition matrix over decreasing hbar.

    Requires at least three values.  Fits the log-log slope of the
    Frobenius error; a ladder whose errors sit at the round-off floor
    (nu = 0, say) skips the fit.  Non-monotone error decay is flagged
    in the result, not raised.
    """
    hbars = sorted(float(h) for h in hbars)
    if len(hbars) < 3:
        raise ConfigError("hbar_sweep needs at least three values")
    if data is None:
        data = crossing_parameters(model)
    if table is None:
        table = build_table(model, data)
    ref = transition_matrix(data.nu, data.w)
    rows = []
    for h in sorted(hbars, reverse=True):
        emp = empirical_transition(
            model, data, table, h, tol=tol, gamma=gamma,
            endpoint_factor=endpoint_factor, basis=basis,
        )
        diff = emp.matrix - ref.entries
        rows.append(
            {
                "hbar": h,
                "err_fro": float(np.linalg.norm(diff)),
                "err_t11": float(abs(diff[0, 0])),
                "err_t12": float(abs(diff[0, 1])),
                "err_t21": float(abs(diff[1, 0])),
                "err_t22": float(abs(diff[1, 1])),
                "proj_residual": float(max(emp.residuals)),
            }
        )
    errs = np.array([r["err_fro"] for r in rows])
    skipped = bool(np.all(errs < 1e-10))
    slope = None
    if not skipped:
        hs = np.array([r["hbar"] for r in rows])
        fit = np.polyfit(np.log(hs), np.log(np.maximum(errs, 1e-300)), 1)
        slope = float(fit[0])
    monotone = bool(np.all(np.diff(errs) < 0.0))
    return SweepResult(
        rows=rows, slope=slope, monotone=monotone, skipped=skipped,
        reference=ref, data=data, table=table,
    )
