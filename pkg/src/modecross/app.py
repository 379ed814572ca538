"""Model catalog, configuration handling, and report emission.

Catalog models are small pencils with a single simple crossing: the
two-level Dirac-type model with a polynomial potential (metric
sigma_x, unavoidable crossing), its tanh-barrier variant supplied as a
truncated Taylor polynomial, the linear two-level avoided-crossing
model with constant gap coupling, and a spectator extension that
block-embeds either base model among gap-separated constant levels
coupled only through B.

Reports are emitted as deterministic JSON (sorted keys, floats printed
to 17 significant digits, complex numbers as [re, im] pairs, schema
tag 1): identical configuration yields byte-identical output.  Tables
go to RFC-4180 CSV; figures are rendered to PNG files next to the
delimited output unless disabled.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .crossing import CrossingData, build_table, crossing_parameters
from .errors import ConfigError, ModelError, PrecisionError
from .oracle import SweepResult, empirical_transition
from .pencil import ModeTable, PencilModel
from .transition import (
    TransitionMatrix,
    polar_form,
    reflection_transmission,
    renumbered,
    transition_matrix,
)

SCHEMA_VERSION = 1

_TANH_SERIES = [0.0, 1.0, 0.0, -1.0 / 3.0, 0.0, 2.0 / 15.0, 0.0, -17.0 / 315.0]


def tanh_taylor_coeffs(degree: int = 7) -> list[float]:
    """Maclaurin coefficients of tanh up to the given degree (max 7).

    The truncation is accurate for |argument| well inside pi/2, the
    convergence radius of the series.
    """
    if not 1 <= degree <= 7:
        raise ConfigError("tanh Taylor catalog entry supports degrees 1 through 7")
    return _TANH_SERIES[: degree + 1]


def _poly_real_roots(coeffs: list[float], interval: tuple[float, float]) -> list[float]:
    arr = np.trim_zeros(np.asarray(coeffs, dtype=float), "b")
    if arr.size <= 1:
        return []
    roots = np.roots(arr[::-1])
    out = []
    for r in roots:
        if abs(r.imag) < 1e-9 and interval[0] < r.real < interval[1]:
            out.append(float(r.real))
    return sorted(out)


def model_dirac(
    E: float = 0.0,
    u_coeffs=(0.0, 1.0),
    p: float = 1.0,
    interval: tuple[float, float] = (-1.0, 1.0),
) -> PencilModel:
    """Two-level Dirac-type model: K = (E - U(x)) I, B = p sigma_y, G = sigma_x.

    The branches are +-(E - U(x)); the crossing sits at the root of
    E - U, which must be unique and simple on the interval (ModelError
    otherwise).  The metric signs of the pair are opposite, so the
    crossing is unavoidable and the coupling p controls tunneling.
    """
    u = [float(c) for c in u_coeffs]
    gap_poly = [-c for c in u]
    gap_poly[0] += float(E)
    roots = _poly_real_roots(gap_poly, interval)
    if len(roots) != 1:
        raise ModelError(
            f"E - U must have exactly one root on {interval}, found {len(roots)}"
        )
    dpoly = np.polynomial.polynomial.polyder(gap_poly)
    slope = float(np.polynomial.polynomial.polyval(roots[0], dpoly))
    if abs(slope) < 1e-10:
        raise ModelError(f"E - U has a degenerate (non-simple) root at x = {roots[0]:.6g}")
    eye = np.eye(2)
    k_coeffs = [gap_poly[m] * eye for m in range(len(gap_poly))]
    b0 = np.array([[0.0, -1j * p], [1j * p, 0.0]])
    metric = np.array([[0.0, 1.0], [1.0, 0.0]])
    return PencilModel(
        k_coeffs=k_coeffs, b_coeffs=[b0], metric=metric, interval=interval, label="dirac"
    )


def model_dirac_tanh(
    E: float = 0.0,
    p: float = 1.0,
    center: float = 0.1,
    degree: int = 7,
    interval: tuple[float, float] = (-0.5, 0.7),
) -> PencilModel:
    """Dirac-type model with U(x) = tanh(x - center) as a truncated Taylor polynomial."""
    base = np.polynomial.Polynomial(tanh_taylor_coeffs(degree))
    shifted = base(np.polynomial.Polynomial([-center, 1.0]))
    m = model_dirac(E=E, u_coeffs=list(shifted.coef), p=p, interval=interval)
    m.label = "dirac_tanh"
    return m


def model_landau_zener(
    slope: float = 1.0,
    gap: float = 1.0,
    interval: tuple[float, float] = (-1.0, 1.0),
) -> PencilModel:
    """Linear avoided-crossing model: K = slope x sigma_z, B = gap sigma_x, G = I."""
    if slope <= 0:
        raise ModelError("slope must be positive")
    k1 = np.diag([float(slope), -float(slope)])
    b0 = np.array([[0.0, float(gap)], [float(gap), 0.0]])
    return PencilModel(
        k_coeffs=[np.zeros((2, 2)), k1],
        b_coeffs=[b0],
        metric=np.eye(2),
        interval=interval,
        label="lz",
    )


def model_spectator(
    base: PencilModel,
    extra_levels=((5.0, 0.3), (-5.0, 0.3)),
    min_gap: float = 0.5,
) -> PencilModel:
    """Base model block-embedded among constant spectator levels.

    Each extra level contributes a constant eigenvalue (its offset,
    with unit metric sign) and couples to every base mode through B
    only, with a real coupling strength.  Offsets must stay at least
    min_gap away from the base branches over the whole interval
    (ModelError otherwise), so the pair structure at the crossing is
    untouched.
    """
    nb = base.dim
    ns = len(extra_levels)
    dim = nb + ns
    a, b = base.interval
    xs = np.linspace(a, b, 101)
    branch_vals = []
    for x in xs:
        vals = np.linalg.eigvals(np.linalg.solve(base.metric, base.k_at(x)))
        branch_vals.append(np.sort(vals.real))
    branch_vals = np.asarray(branch_vals)
    for off, _ in extra_levels:
        if np.abs(branch_vals - float(off)).min() < min_gap:
            raise ModelError(
                f"spectator offset {off} comes within {min_gap} of a base branch"
            )

    k_coeffs = []
    for m, kc in enumerate(base.k_coeffs):
        big = np.zeros((dim, dim), dtype=complex)
        big[:nb, :nb] = kc
        if m == 0:
            for s, (off, _) in enumerate(extra_levels):
                big[nb + s, nb + s] = float(off)
        k_coeffs.append(big)
    b_coeffs = []
    for m, bc in enumerate(base.b_coeffs):
        big = np.zeros((dim, dim), dtype=complex)
        big[:nb, :nb] = bc
        if m == 0:
            for s, (_, coup) in enumerate(extra_levels):
                big[nb + s, :nb] = float(coup)
                big[:nb, nb + s] = float(coup)
        b_coeffs.append(big)
    metric = np.zeros((dim, dim), dtype=complex)
    metric[:nb, :nb] = base.metric
    for s in range(ns):
        metric[nb + s, nb + s] = 1.0
    return PencilModel(
        k_coeffs=k_coeffs,
        b_coeffs=b_coeffs,
        metric=metric,
        interval=base.interval,
        label=f"{base.label}+spectators",
    )


# -- configuration ----------------------------------------------------------


def _matrix_to_json(m: np.ndarray) -> list:
    return [[[float(v.real), float(v.imag)] for v in row] for row in np.asarray(m, dtype=complex)]


def _matrix_from_json(rows) -> np.ndarray:
    try:
        return np.array([[complex(c[0], c[1]) for c in row] for row in rows])
    except (TypeError, IndexError) as exc:
        raise ConfigError(f"malformed complex matrix in config: {exc}") from None


@dataclass
class ModelConfig:
    """Parsed run configuration: a catalog model or inline pencil data."""

    model: dict | None = None
    pencil: dict | None = None
    interval: tuple[float, float] = (-1.0, 1.0)
    hbars: list = field(default_factory=lambda: [1e-3])
    gamma: float = 0.2
    tol: float = 1e-10
    out: str | None = None

    @classmethod
    def from_dict(cls, raw: dict) -> "ModelConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config root must be an object")
        known = {"model", "pencil", "interval", "hbars", "gamma", "tol", "out"}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if ("model" in raw) == ("pencil" in raw):
            raise ConfigError("config must contain exactly one of 'model' or 'pencil'")
        kw: dict = {}
        if "model" in raw:
            if not isinstance(raw["model"], dict) or "name" not in raw["model"]:
                raise ConfigError("'model' must be an object with a 'name'")
            kw["model"] = dict(raw["model"])
        if "pencil" in raw:
            pc = raw["pencil"]
            for key in ("dim", "k_coeffs", "b_coeffs", "metric"):
                if key not in pc:
                    raise ConfigError(f"inline pencil config missing '{key}'")
            kw["pencil"] = {
                "dim": int(pc["dim"]),
                "k_coeffs": [_matrix_to_json(_matrix_from_json(m)) for m in pc["k_coeffs"]],
                "b_coeffs": [_matrix_to_json(_matrix_from_json(m)) for m in pc["b_coeffs"]],
                "metric": _matrix_to_json(_matrix_from_json(pc["metric"])),
            }
        if "interval" in raw:
            iv = raw["interval"]
            if len(iv) != 2:
                raise ConfigError("interval must be [a, b]")
            kw["interval"] = (float(iv[0]), float(iv[1]))
        if "hbars" in raw:
            kw["hbars"] = [float(h) for h in raw["hbars"]]
            if any(h <= 0 for h in kw["hbars"]):
                raise ConfigError("hbars must be positive")
        if "gamma" in raw:
            kw["gamma"] = float(raw["gamma"])
            if not 0.0 < kw["gamma"] < 0.5:
                raise ConfigError("gamma must lie in (0, 0.5)")
        if "tol" in raw:
            kw["tol"] = float(raw["tol"])
        if "out" in raw and raw["out"] is not None:
            kw["out"] = str(raw["out"])
        return cls(**kw)

    def to_dict(self) -> dict:
        out: dict = {
            "interval": [self.interval[0], self.interval[1]],
            "hbars": list(self.hbars),
            "gamma": self.gamma,
            "tol": self.tol,
        }
        if self.model is not None:
            out["model"] = dict(self.model)
        if self.pencil is not None:
            out["pencil"] = dict(self.pencil)
        if self.out is not None:
            out["out"] = self.out
        return out

    def build(self) -> PencilModel:
        if self.pencil is not None:
            pc = self.pencil
            model = PencilModel(
                k_coeffs=[_matrix_from_json(m) for m in pc["k_coeffs"]],
                b_coeffs=[_matrix_from_json(m) for m in pc["b_coeffs"]],
                metric=_matrix_from_json(pc["metric"]),
                interval=self.interval,
                label="pencil",
            )
            if model.dim != pc["dim"]:
                raise ConfigError(
                    f"declared dim {pc['dim']} does not match coefficients ({model.dim})"
                )
            return model
        params = dict(self.model)
        name = params.pop("name")
        params.setdefault("interval", self.interval)
        params["interval"] = tuple(params["interval"])
        try:
            if name == "dirac":
                return model_dirac(**params)
            if name == "dirac_tanh":
                return model_dirac_tanh(**params)
            if name == "lz":
                return model_landau_zener(**params)
            if name == "spectator":
                base_raw = params.pop("base")
                base_cfg = ModelConfig.from_dict(
                    {"model": base_raw, "interval": list(params.pop("interval"))}
                )
                return model_spectator(base_cfg.build(), **params)
        except TypeError as exc:
            raise ConfigError(f"bad parameters for model '{name}': {exc}") from None
        raise ConfigError(f"unknown catalog model '{name}'")


def load_config(path: str) -> ModelConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return ModelConfig.from_dict(raw)


# -- deterministic JSON -----------------------------------------------------


def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        raise PrecisionError(f"non-finite value {x!r} in report")
    if x == int(x) and abs(x) < 1e15:
        return format(x, ".1f")
    return format(x, ".17g")


def _json_text(obj, indent: int = 0) -> str:
    pad = "  " * indent
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _fmt_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = []
        for key in sorted(obj):
            items.append(f'{pad}  {json.dumps(str(key))}: {_json_text(obj[key], indent + 1)}')
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        seq = list(obj)
        if not seq:
            return "[]"
        flat = all(isinstance(v, (int, float, bool)) or v is None for v in seq)
        if flat:
            return "[" + ", ".join(_json_text(v) for v in seq) + "]"
        items = [f"{pad}  {_json_text(v, indent + 1)}" for v in seq]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    raise ConfigError(f"cannot serialize {type(obj).__name__} into a report")


def render_json(obj: dict) -> str:
    """Deterministic JSON text: sorted keys, 17-significant-digit floats."""
    return _json_text(obj) + "\n"


def _cpx(z: complex) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def _cmatrix(m) -> list:
    return [[_cpx(v) for v in row] for row in np.asarray(m, dtype=complex)]


# -- reports ----------------------------------------------------------------


@dataclass
class RunReport:
    """Everything an analysis run produces, ready for emission."""

    label: str
    crossing: CrossingData
    tm: TransitionMatrix
    empirical: list = field(default_factory=list)
    sweep: SweepResult | None = None
    warnings: list = field(default_factory=list)

    def to_dict(self) -> dict:
        data = self.crossing
        self._validate_matrices()
        polar = polar_form(self.tm)
        doc: dict = {
            "schema": SCHEMA_VERSION,
            "label": self.label,
            "crossing": {
                "x_star": data.x_star,
                "beta0": data.beta0,
                "q_slope": data.q_slope,
                "b_shift": data.b_shift,
                "p": data.p,
                "w": data.w,
                "nu": _cpx(data.nu),
                "theta_a": data.theta_a,
                "sigma": _cpx(data.sigma),
                "zeta": data.zeta,
                "kappa_plus": _cpx(data.kappa_plus),
                "kappa_minus": _cpx(data.kappa_minus),
                "classification": data.classification,
            },
            "transition": {
                "nu": _cpx(self.tm.nu),
                "w": self.tm.w,
                "theta_prime": self.tm.theta_prime,
                "entries": _cmatrix(self.tm.entries),
                "magnitudes": [[float(v) for v in row] for row in polar["magnitudes"]],
                "phases": [[float(v) for v in row] for row in polar["phases"]],
                "det": _cpx(self.tm.det()),
            },
            "reading": self._reading(),
            "warnings": list(self.warnings),
        }
        if self.empirical:
            doc["empirical"] = [
                {
                    "hbar": emp.hbar,
                    "matrix": _cmatrix(emp.matrix),
                    "projection_residuals": [float(r) for r in emp.residuals],
                    "flux_residuals": [float(r) for r in emp.flux_residuals],
                    "error_fro": float(np.linalg.norm(emp.matrix - self.tm.entries)),
                    "basis": emp.basis,
                }
                for emp in self.empirical
            ]
        if self.sweep is not None:
            doc["sweep"] = {
                "rows": [dict(r) for r in self.sweep.rows],
                "slope": self.sweep.slope,
                "monotone": self.sweep.monotone,
                "skipped": self.sweep.skipped,
            }
        return doc

    def _reading(self) -> dict:
        if self.tm.w == -1:
            r, tc = reflection_transmission(self.tm)
            return {
                "type": "reflection_transmission",
                "R": _cpx(r),
                "R_abs": abs(r),
                "Tc": _cpx(tc),
                "Tc_abs": abs(tc),
            }
        rn = renumbered(self.tm)
        return {
            "type": "transmission_excitation",
            "renumbered": _cmatrix(rn),
            "transmission_abs": float(abs(rn[0, 0])),
            "excitation_abs": float(abs(rn[1, 0])),
            "theta_prime": self.tm.theta_prime,
        }

    def _validate_matrices(self) -> None:
        res = self.tm.flux_residuals()
        if max(res) > 1e-10:
            raise PrecisionError(f"closed-form matrix violates flux identities: {res}")
        for emp in self.empirical:
            bound = max(0.1, 10.0 * math.sqrt(emp.hbar))
            if max(emp.flux_residuals, default=0.0) > bound:
                raise PrecisionError(
                    f"empirical matrix at hbar = {emp.hbar} violates flux identities "
                    f"beyond {bound:.3g}: {emp.flux_residuals}"
                )


def analyze(
    model: PencilModel,
    hbars=(),
    gamma: float = 0.2,
    tol: float = 1e-10,
    basis: str = "exact",
    with_empirical: bool = True,
    data: CrossingData | None = None,
    table: ModeTable | None = None,
) -> tuple[RunReport, ModeTable]:
    """Full analysis of one model: crossing, closed form, empirical checks."""
    if data is None:
        data = crossing_parameters(model)
    if table is None:
        table = build_table(model, data)
    tm = transition_matrix(data.nu, data.w)
    report = RunReport(label=model.label, crossing=data, tm=tm)
    if with_empirical:
        for h in hbars:
            report.empirical.append(
                empirical_transition(
                    model, data, table, float(h), tol=tol, gamma=gamma, basis=basis
                )
            )
    return report, table


# -- emission ---------------------------------------------------------------


def write_csv(path: str, header: list[str], rows: list[list]) -> None:
    """RFC-4180 CSV with CRLF line endings."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)


def sweep_csv_rows(sweep: SweepResult) -> tuple[list[str], list[list]]:
    header = ["hbar", "err_fro", "err_t11", "err_t12", "err_t21", "err_t22", "proj_residual"]
    rows = [[_fmt_float(r[h]) for h in header] for r in sweep.rows]
    return header, rows


def mode_csv_rows(xs, vectors, phases, flux) -> tuple[list[str], list[list]]:
    dim = len(vectors[0])
    header = ["x"]
    for c in range(dim):
        header += [f"re_c{c}", f"im_c{c}"]
    header += ["phase_re", "phase_im", "flux"]
    rows = []
    for x, vec, ph, fl in zip(xs, vectors, phases, flux):
        row = [_fmt_float(float(x))]
        for c in range(dim):
            row += [_fmt_float(float(vec[c].real)), _fmt_float(float(vec[c].imag))]
        row += [_fmt_float(float(ph.real)), _fmt_float(float(ph.imag)), _fmt_float(float(fl))]
        rows.append(row)
    return header, rows


def branch_csv_rows(table: ModeTable, data: CrossingData, hbar: float) -> tuple[list[str], list[list]]:
    """Tabulated eigenvalue branches plus the perturbed pair near the crossing.

    The perturbed columns are filled only inside the stretched window
    shown by figure_branches and left empty elsewhere.
    """
    from .crossing import perturbed_eigs_inner

    width = 6.0 * math.sqrt(hbar) * max(abs(data.b_shift) + data.p / data.q_slope, 1.0)
    header = ["x"] + [f"beta_{j + 1}" for j in range(table.dim)]
    header += ["perturbed_beta_1", "perturbed_beta_2"]
    rows = []
    for x in table.xs:
        row = [_fmt_float(float(x))]
        row += [_fmt_float(float(table.beta(j, x))) for j in range(table.dim)]
        if abs(x - data.x_star) <= width:
            tau = (x - data.x_star) / math.sqrt(hbar)
            ie = perturbed_eigs_inner(data, tau, hbar)
            row += [_fmt_float(complex(ie.beta1).real), _fmt_float(complex(ie.beta2).real)]
        else:
            row += ["", ""]
        rows.append(row)
    return header, rows


def figure_branches(table: ModeTable, data: CrossingData, hbar: float, path: str) -> None:
    """Eigenvalue branches with the perturbed inner branches overlaid."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    from .crossing import perturbed_eigs_inner

    fig, ax = plt.subplots(figsize=(7, 4.5))
    xs = table.xs
    for j in range(table.dim):
        ax.plot(xs, table.beta(j, xs), lw=1.2, label=f"beta_{j + 1}")
    width = 6.0 * math.sqrt(hbar) * max(abs(data.b_shift) + data.p / data.q_slope, 1.0)
    txs = np.linspace(data.x_star - width, data.x_star + width, 200)
    inner1 = []
    inner2 = []
    for x in txs:
        tau = (x - data.x_star) / math.sqrt(hbar)
        ie = perturbed_eigs_inner(data, tau, hbar)
        inner1.append(complex(ie.beta1).real)
        inner2.append(complex(ie.beta2).real)
    ax.plot(txs, inner1, "k--", lw=0.9, label="perturbed (inner)")
    ax.plot(txs, inner2, "k--", lw=0.9)
    ax.axvline(data.x_star, color="gray", lw=0.6, ls=":")
    ax.set_xlabel("x")
    ax.set_ylabel("beta")
    ax.set_title(f"branches near the crossing ({data.classification})")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def figure_sweep(sweep: SweepResult, path: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    hs = [r["hbar"] for r in sweep.rows]
    errs = [r["err_fro"] for r in sweep.rows]
    fig, ax = plt.subplots(figsize=(5.5, 4))
    ax.loglog(hs, errs, "o-")
    if sweep.slope is not None:
        ax.set_title(f"empirical error, fitted slope {sweep.slope:.2f}")
    else:
        ax.set_title("empirical error (slope fit skipped)")
    ax.set_xlabel("hbar")
    ax.set_ylabel("Frobenius error")
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def figure_modes(xs, amp1, amp2, flux1, flux2, path: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, axes = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    a1 = np.asarray(amp1)
    a2 = np.asarray(amp2)
    for c in range(a1.shape[1]):
        axes[0].plot(xs, a1[:, c].real, lw=1.0, label=f"mode 1, Re c{c}")
        axes[0].plot(xs, a2[:, c].real, lw=1.0, ls="--", label=f"mode 2, Re c{c}")
    axes[0].set_ylabel("component")
    axes[0].legend(fontsize=7, ncol=2)
    axes[1].plot(xs, flux1, label="mode 1 flux")
    axes[1].plot(xs, flux2, ls="--", label="mode 2 flux")
    axes[1].set_xlabel("x")
    axes[1].set_ylabel("(psi, G psi)")
    axes[1].legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
