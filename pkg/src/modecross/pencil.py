"""Matrix pencils K(x) - beta*G with Hermitian coefficients.

The model is a polynomial family K(x) (Hermitian for real x) together
with a constant Hermitian invertible metric G and a first-order
perturbation family B(x).  Eigenvectors of the pencil are normalized
in the indefinite metric, (phi_j, G phi_j) = N_j with |N_j| = 1, which
makes the flux (psi, G psi) the conserved pairing of the evolution
equation.  Real eigenvalue clusters are re-orthogonalized with respect
to G; complex eigenvalues come in conjugate pairs and carry no metric
normalization.

ModeTable tracks a full eigenframe across an interval, anchored at a
seed frame, and exposes splined eigenvalues, mode components, pair
matrix elements of B, and the diagonal conversion phase, which is what
the adiabatic construction consumes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.interpolate import CubicSpline
from scipy.optimize import linear_sum_assignment

from .errors import (
    ConfigError,
    DefectivePencilError,
    DomainError,
    PrecisionError,
    SpectralGapError,
    TrackingError,
)

HERMITICITY_TOL = 1e-14
CLUSTER_REL_TOL = 1e-8
METRIC_FLOOR = 1e-10
OVERLAP_AMBIGUITY = 1e-6
DEFAULT_MARGIN = 0.05


def _as_matrix_list(coeffs, dim: int | None, what: str) -> list[np.ndarray]:
    out = []
    for m, c in enumerate(coeffs):
        a = np.asarray(c, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ConfigError(f"{what} coefficient {m} is not a square matrix")
        if dim is None:
            dim = a.shape[0]
        if a.shape[0] != dim:
            raise ConfigError(f"{what} coefficient {m} has dimension {a.shape[0]}, expected {dim}")
        scale = max(1.0, float(np.linalg.norm(a)))
        if np.linalg.norm(a - a.conj().T) > HERMITICITY_TOL * scale * 10.0:
            raise ConfigError(f"{what} coefficient {m} is not Hermitian")
        out.append(0.5 * (a + a.conj().T))
    return out


@dataclass
class PencilModel:
    """Polynomial pencil data: K(x), B(x), metric G, and the x interval.

    k_coeffs and b_coeffs hold ascending-power matrix coefficients; all
    must be Hermitian.  The metric must be Hermitian with singular
    values bounded away from zero.  Evaluation is permitted on the
    interval extended by the margin fraction on both sides.
    """

    k_coeffs: list
    b_coeffs: list
    metric: np.ndarray
    interval: tuple
    margin: float = DEFAULT_MARGIN
    label: str = "pencil"

    def __post_init__(self) -> None:
        self.k_coeffs = _as_matrix_list(self.k_coeffs, None, "K")
        dim = self.k_coeffs[0].shape[0]
        self.b_coeffs = _as_matrix_list(self.b_coeffs, dim, "B")
        g = np.asarray(self.metric, dtype=complex)
        if g.shape != (dim, dim):
            raise ConfigError(f"metric has shape {g.shape}, expected ({dim}, {dim})")
        if np.linalg.norm(g - g.conj().T) > HERMITICITY_TOL * max(1.0, float(np.linalg.norm(g))) * 10.0:
            raise ConfigError("metric is not Hermitian")
        sv = np.linalg.svd(g, compute_uv=False)
        if sv[0] == 0.0 or sv[-1] < METRIC_FLOOR * sv[0]:
            raise ConfigError("metric is numerically singular")
        self.metric = 0.5 * (g + g.conj().T)
        a, b = float(self.interval[0]), float(self.interval[1])
        if not a < b:
            raise ConfigError(f"empty interval ({a}, {b})")
        self.interval = (a, b)
        if not 0.0 <= float(self.margin) < 1.0:
            raise ConfigError("margin must lie in [0, 1)")

    @property
    def dim(self) -> int:
        return self.k_coeffs[0].shape[0]

    def _check_domain(self, x: float) -> None:
        a, b = self.interval
        pad = self.margin * (b - a)
        if not (a - pad <= x <= b + pad):
            raise DomainError(f"x = {x} outside interval [{a}, {b}] extended by margin {pad:.3g}")

    def k_at(self, x: float) -> np.ndarray:
        self._check_domain(x)
        return _horner(self.k_coeffs, x)

    def b_at(self, x: float) -> np.ndarray:
        self._check_domain(x)
        return _horner(self.b_coeffs, x)

    def k_prime_at(self, x: float) -> np.ndarray:
        self._check_domain(x)
        d = [m * c for m, c in enumerate(self.k_coeffs)][1:]
        if not d:
            return np.zeros_like(self.k_coeffs[0])
        return _horner(d, x)

    def k_second_at(self, x: float) -> np.ndarray:
        self._check_domain(x)
        d = [m * (m - 1) * c for m, c in enumerate(self.k_coeffs)][2:]
        if not d:
            return np.zeros_like(self.k_coeffs[0])
        return _horner(d, x)


def _horner(coeffs: list[np.ndarray], x: float) -> np.ndarray:
    acc = np.zeros_like(coeffs[0])
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def eval_pencil(model: PencilModel, x: float) -> tuple[np.ndarray, np.ndarray]:
    """Coefficient matrices (K(x), B(x)) by Horner evaluation."""
    return model.k_at(x), model.b_at(x)


@dataclass
class SpectralFrame:
    """Eigenframe of (K, G) at one point.

    modes holds eigenvectors as columns; norms[j] is the metric sign
    (phi_j, G phi_j) in {-1.0, +1.0} for real eigenvalues and 0.0 for
    members of complex-conjugate pairs, which are G-isotropic.
    """

    x: float
    betas: np.ndarray
    modes: np.ndarray
    norms: np.ndarray

    @property
    def dim(self) -> int:
        return self.modes.shape[0]

    def mode(self, j: int) -> np.ndarray:
        return self.modes[:, j]


def g_inner(u: np.ndarray, v: np.ndarray, metric: np.ndarray) -> complex:
    """Indefinite pairing (u, G v), conjugate-linear in the first slot."""
    return complex(np.vdot(u, metric @ v))


def matrix_elements(frame: SpectralFrame, matrix: np.ndarray) -> np.ndarray:
    """All pairings (phi_i, M phi_j) of a frame with a matrix."""
    return frame.modes.conj().T @ matrix @ frame.modes


def solve_pencil(k: np.ndarray, g: np.ndarray, x: float = 0.0) -> SpectralFrame:
    """Eigensolve of K phi = beta G phi with metric normalization.

    Real eigenvalues are clustered at relative tolerance 1e-8; each
    cluster is re-orthogonalized so that the restricted Gram matrix of
    G becomes diag(+-1), which fixes mixing inside degenerate groups.
    A cluster whose Gram matrix is singular signals a defective (or
    metric-degenerate) pencil and raises DefectivePencilError.  Complex
    eigenvalues are returned in conjugate pairs with unit Euclidean
    norm and metric sign 0.

    Ordering: real eigenvalues ascending, then complex ones by real
    part, conjugates adjacent (positive imaginary part first).
    """
    k = np.asarray(k, dtype=complex)
    g = np.asarray(g, dtype=complex)
    dim = k.shape[0]
    # the metric norm keeps the residual budget sane when K is near zero
    scale = max(float(np.linalg.norm(k)), float(np.linalg.norm(g)), 1e-300)
    w, v = sla.eig(sla.solve(g, k))

    is_real = np.abs(w.imag) <= 1e-9 * max(1.0, np.abs(w).max())
    real_idx = np.flatnonzero(is_real)
    cplx_idx = np.flatnonzero(~is_real)

    betas: list[complex] = []
    cols: list[np.ndarray] = []
    norms: list[float] = []

    if real_idx.size:
        order = real_idx[np.argsort(w[real_idx].real)]
        vals = w[order].real
        tol = CLUSTER_REL_TOL * max(1.0, float(np.abs(w).max()))
        start = 0
        while start < order.size:
            stop = start + 1
            while stop < order.size and vals[stop] - vals[stop - 1] <= tol:
                stop += 1
            cluster = order[start:stop]
            wv = v[:, cluster]
            gram = wv.conj().T @ g @ wv
            gram = 0.5 * (gram + gram.conj().T)
            d, u = sla.eigh(gram)
            if np.abs(d).min() < METRIC_FLOOR * max(1.0, np.abs(d).max()):
                raise DefectivePencilError(
                    f"eigenvalue cluster near beta = {vals[start]:.6g} "
                    f"(size {cluster.size}) has a singular metric Gram matrix"
                )
            new = wv @ u / np.sqrt(np.abs(d))
            sgn = np.sign(d)
            # keep ascending beta order inside the cluster irrelevant (all equal);
            # order by metric sign descending for determinism
            sub = np.argsort(-sgn, kind="stable")
            mean_beta = float(vals[start:stop].mean())
            for i in sub:
                betas.append(mean_beta)
                cols.append(new[:, i])
                norms.append(float(sgn[i]))
            start = stop

    if cplx_idx.size:
        rem = list(cplx_idx)
        pairs = []
        while rem:
            i = rem.pop(0)
            partner = None
            for j in rem:
                if abs(w[j] - np.conj(w[i])) <= 1e-8 * max(1.0, abs(w[i])):
                    partner = j
                    break
            if partner is None:
                raise DefectivePencilError(
                    f"complex eigenvalue {w[i]:.6g} lacks a conjugate partner"
                )
            rem.remove(partner)
            a, b = (i, partner) if w[i].imag > 0 else (partner, i)
            pairs.append((a, b))
        pairs.sort(key=lambda ab: (w[ab[0]].real, w[ab[0]].imag))
        for a, b in pairs:
            for j in (a, b):
                betas.append(complex(w[j]))
                cols.append(v[:, j] / np.linalg.norm(v[:, j]))
                norms.append(0.0)

    modes = np.column_stack(cols)
    betas_arr = np.asarray(betas, dtype=complex)
    res = k @ modes - g @ (modes * betas_arr[np.newaxis, :])
    worst = np.abs(res).max()
    if worst > 1e-10 * scale * max(1.0, float(np.abs(betas_arr).max())):
        raise PrecisionError(f"pencil residual {worst:.3e} exceeds budget at x = {x}")
    return SpectralFrame(x=float(x), betas=betas_arr, modes=modes, norms=np.asarray(norms))


def frame_at(model: PencilModel, x: float) -> SpectralFrame:
    """solve_pencil applied to the model coefficients at x."""
    return solve_pencil(model.k_at(x), model.metric, x=x)


def conversion_coeffs(frame: SpectralFrame, k_prime: np.ndarray) -> np.ndarray:
    """Off-diagonal coupling matrix S_kj = (phi_k, K' phi_j) / ((beta_j - beta_k) N_k).

    Diagonal entries are returned as zero; the diagonal conversion
    phase needs mode derivatives and lives on the tracked table.
    Raises SpectralGapError when a denominator falls below the
    clustering threshold, since the formula is meaningless across a
    degenerate pair.
    """
    el = matrix_elements(frame, k_prime)
    dim = frame.dim
    s = np.zeros((dim, dim), dtype=complex)
    scale = max(1.0, float(np.abs(frame.betas).max()))
    for kk in range(dim):
        for j in range(dim):
            if kk == j:
                continue
            den = (frame.betas[j] - frame.betas[kk]) * frame.norms[kk]
            if abs(den) < CLUSTER_REL_TOL * scale:
                raise SpectralGapError(
                    f"conversion coefficient ({kk}, {j}) has near-degenerate denominator"
                )
            s[kk, j] = el[kk, j] / den
    return s


def track_modes(prev: SpectralFrame, new: SpectralFrame, metric: np.ndarray) -> SpectralFrame:
    """Reorder and rephase a freshly solved frame to continue a previous one.

    Assignment maximizes total |(phi_prev, G phi_new)|; each matched
    overlap must beat the runner-up in its row by more than 1e-6 or
    TrackingError is raised.  Phases are rotated so each matched
    overlap is real with the sign of the mode's metric norm (the
    aligned overlap of a negative-norm mode is negative), which is
    discrete parallel transport in the metric.
    """
    ov = prev.modes.conj().T @ metric @ new.modes
    mag = np.abs(ov)
    row, col = linear_sum_assignment(-mag)
    perm = np.empty(prev.dim, dtype=int)
    for r, c in zip(row, col):
        perm[r] = c
        others = np.delete(mag[r], c)
        if others.size and mag[r, c] - others.max() < OVERLAP_AMBIGUITY:
            raise TrackingError(
                f"ambiguous mode continuation at x = {new.x:.6g}: "
                f"overlap gap {mag[r, c] - others.max():.3e} for mode {r}"
            )
    modes = new.modes[:, perm].copy()
    betas = new.betas[perm].copy()
    norms = new.norms[perm].copy()
    for j in range(prev.dim):
        z = ov[j, perm[j]] * np.sign(prev.norms[j])
        if abs(z) > 0:
            modes[:, j] *= np.exp(-1j * np.angle(z))
    if not np.array_equal(np.sign(norms), np.sign(prev.norms)):
        raise TrackingError(f"metric signature changed during tracking at x = {new.x:.6g}")
    return SpectralFrame(x=new.x, betas=betas, modes=modes, norms=norms)


class ModeTable:
    """Tracked eigenframe family over a grid, with splined quantities.

    Built outward from a seed frame (ordinarily the gauge-fixed frame
    at the crossing point), so mode indices and phases are globally
    consistent with the seed.  Exposes cubic-spline evaluations of the
    eigenvalue branches, mode components, pair matrix elements of B,
    the diagonal conversion phase Im S_jj, and the spectator
    second-order eigenvalue shifts.
    """

    def __init__(self, model: PencilModel, seed: SpectralFrame, n_points: int = 1601):
        if np.any(seed.norms == 0):
            raise TrackingError("seed frame contains complex-pair modes; tracking needs real spectrum")
        self.model = model
        self.x_seed = float(seed.x)
        a, b = model.interval
        xs = np.unique(np.concatenate([np.linspace(a, b, n_points), [self.x_seed]]))
        self.xs = xs
        self.seed_index = int(np.searchsorted(xs, self.x_seed))
        dim = model.dim

        frames: list[SpectralFrame | None] = [None] * xs.size
        frames[self.seed_index] = seed
        for i in range(self.seed_index + 1, xs.size):
            raw = frame_at(model, xs[i])
            frames[i] = track_modes(frames[i - 1], raw, model.metric)
        for i in range(self.seed_index - 1, -1, -1):
            raw = frame_at(model, xs[i])
            frames[i] = track_modes(frames[i + 1], raw, model.metric)
        self.frames: list[SpectralFrame] = frames  # type: ignore[assignment]

        betas = np.empty((xs.size, dim))
        modes = np.empty((xs.size, dim, dim), dtype=complex)
        for i, f in enumerate(self.frames):
            if np.any(np.abs(f.betas.imag) > 1e-9):
                raise TrackingError(f"complex eigenvalue entered the tracked window at x = {xs[i]:.6g}")
            betas[i] = f.betas.real
            modes[i] = f.modes
        self.norms = self.frames[self.seed_index].norms.copy()
        self._beta_spl = [CubicSpline(xs, betas[:, j]) for j in range(dim)]
        self._mode_spl = [CubicSpline(xs, modes[:, :, j]) for j in range(dim)]

        b_elem = np.empty((xs.size, 2, 2), dtype=complex)
        for i, f in enumerate(self.frames):
            bm = model.b_at(xs[i])
            sub = f.modes[:, :2]
            b_elem[i] = sub.conj().T @ bm @ sub
        self._b_pair_spl = CubicSpline(xs, b_elem)
        self._b_pair_anti = self._b_pair_spl.antiderivative()

        dmod = np.gradient(modes, xs, axis=0)
        g = model.metric
        ims = np.empty((xs.size, 2))
        for j in range(2):
            raw = np.einsum("ni,ij,nj->n", modes[:, :, j].conj(), g, dmod[:, :, j])
            ims[:, j] = raw.imag / self.norms[j]
        self._im_s_spl = [CubicSpline(xs, ims[:, j]) for j in range(2)]
        self._im_s_anti = [s.antiderivative() for s in self._im_s_spl]

        spect = np.zeros((xs.size, 2))
        if dim > 2:
            for i, f in enumerate(self.frames):
                bm = model.b_at(xs[i])
                el = f.modes.conj().T @ bm @ f.modes
                for j in range(2):
                    tot = 0.0
                    for kk in range(2, dim):
                        den = (betas[i, j] - betas[i, kk]) * self.norms[j] * self.norms[kk]
                        tot += (el[j, kk] * el[kk, j]).real / den
                    spect[i, j] = tot
        self._spect_spl = [CubicSpline(xs, spect[:, j]) for j in range(2)]
        self._beta_anti = [s.antiderivative() for s in self._beta_spl]
        self._spect_anti = [s.antiderivative() for s in self._spect_spl]

        # Antiderivative of the pair cross term 2 Re(B_01 B_10) / (gap N_0 N_1),
        # built per side because the eigenvalue gap vanishes at the seed point.
        step = float(np.median(np.diff(xs)))
        self._cross_collar = 3.0 * step
        pair_n = self.norms[0] * self.norms[1]
        cross = 2.0 * (b_elem[:, 0, 1] * b_elem[:, 1, 0]).real
        gap = betas[:, 0] - betas[:, 1]
        self._cross_anti = []
        for sel in (xs <= self.x_seed - self._cross_collar, xs >= self.x_seed + self._cross_collar):
            if int(sel.sum()) >= 4:
                vals = cross[sel] / (gap[sel] * pair_n)
                self._cross_anti.append(CubicSpline(xs[sel], vals).antiderivative())
            else:
                self._cross_anti.append(None)

    @property
    def dim(self) -> int:
        return self.model.dim

    def frame_nearest(self, x: float) -> SpectralFrame:
        i = int(np.clip(np.searchsorted(self.xs, x), 0, self.xs.size - 1))
        if i > 0 and abs(self.xs[i - 1] - x) < abs(self.xs[i] - x):
            i -= 1
        return self.frames[i]

    def beta(self, j: int, x) -> np.ndarray | float:
        return self._beta_spl[j](x)

    def beta_prime(self, j: int, x) -> np.ndarray | float:
        return self._beta_spl[j](x, 1)

    def mode(self, j: int, x: float) -> np.ndarray:
        return np.asarray(self._mode_spl[j](x))

    def mode_prime(self, j: int, x: float) -> np.ndarray:
        return np.asarray(self._mode_spl[j](x, 1))

    def b_pair(self, x: float) -> np.ndarray:
        """Matrix elements (phi_i, B phi_j), i, j in the crossing pair."""
        return np.asarray(self._b_pair_spl(x))

    def im_s_diag(self, j: int, x) -> np.ndarray | float:
        return self._im_s_spl[j](x)

    def im_s_integral(self, j: int, x_from: float, x_to: float) -> float:
        return float(self._im_s_anti[j](x_to) - self._im_s_anti[j](x_from))

    def spect_shift(self, j: int, x) -> np.ndarray | float:
        """Second-order eigenvalue shift from modes outside the pair."""
        return self._spect_spl[j](x)

    def beta_integral(self, j: int, x_from: float, x_to: float) -> float:
        return float(self._beta_anti[j](x_to) - self._beta_anti[j](x_from))

    def b_pair_integral(self, x_from: float, x_to: float) -> np.ndarray:
        """Elementwise integral of the pair matrix of B over [x_from, x_to]."""
        return np.asarray(self._b_pair_anti(x_to) - self._b_pair_anti(x_from))

    def spect_integral(self, j: int, x_from: float, x_to: float) -> float:
        return float(self._spect_anti[j](x_to) - self._spect_anti[j](x_from))

    def pair_cross_integral(self, x_from: float, x_to: float) -> float:
        """Integral of 2 Re(B_01 B_10) / (gap N_0 N_1) over one side.

        Both limits must lie on the same side of the seed point and
        outside the collar where the gap closes.
        """
        lo, hi = sorted((x_from, x_to))
        if hi <= self.x_seed - self._cross_collar:
            anti = self._cross_anti[0]
        elif lo >= self.x_seed + self._cross_collar:
            anti = self._cross_anti[1]
        else:
            raise DomainError(
                f"pair cross integral [{lo:.6g}, {hi:.6g}] touches the gap "
                f"closure collar around x = {self.x_seed:.6g}"
            )
        if anti is None:
            raise DomainError("requested side has too few grid points for the cross term")
        val = float(anti(hi) - anti(lo))
        return val if x_to >= x_from else -val
