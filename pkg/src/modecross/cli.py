"""Command-line interface.

Subcommands: analyze (crossing parameters, closed-form matrix,
empirical checks), oracle (empirical matrices only), sweep (error
decay over an hbar ladder), pcf (Weber function evaluation), modes
(sampled canonical modes and inner solution as CSV).  Reports go to
stdout as deterministic JSON, or into --out as report.json plus CSV
tables and PNG figures; logs go to stderr.

Exit codes: 0 success, 2 configuration problems, 3 violated model
assumptions, 4 numeric failures.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import re
import sys

import numpy as np

from . import app
from .adiabatic import exclusion_radius, leading_mode, phase_integral
from .crossing import build_table, crossing_parameters
from .errors import ConfigError, ModeCrossError
from .inner import inner_full, inner_leading
from .oracle import empirical_transition, hbar_sweep
from .pcf import T_SWITCH, dnu_pair

log = logging.getLogger("modecross")

_TERM_RE = re.compile(
    r"^\s*(?P<coeff>[0-9.]+(?:[eE][+-]?[0-9]+)?)?\s*\*?\s*"
    r"(?P<var>x(?:\s*(?:\*\*|\^)\s*(?P<pow>[0-9]+))?)?\s*$"
)


def parse_poly(text: str) -> list[float]:
    """Polynomial coefficients (ascending) from a short expression.

    Accepts forms like "x", "x - 0.3", "-x", "1 + 0.5*x**3", "2x^2",
    or a plain comma-separated coefficient list "0,1,0,-0.33".
    """
    text = text.strip()
    if not text:
        raise ConfigError("empty polynomial")
    if "," in text:
        try:
            return [float(tok) for tok in text.split(",")]
        except ValueError as exc:
            raise ConfigError(f"bad coefficient list {text!r}: {exc}") from None
    pieces = re.split(r"(?<![eE])([+-])", "+" + text)
    coeffs: dict[int, float] = {}
    sign = 1.0
    for i in range(1, len(pieces), 2):
        sign *= -1.0 if pieces[i] == "-" else 1.0
        term = pieces[i + 1]
        if not term.strip():
            # consecutive signs ("-x", "1 - -2x") fold into the next term
            if i + 1 == len(pieces) - 1:
                raise ConfigError(f"dangling sign in polynomial {text!r}")
            continue
        m = _TERM_RE.match(term)
        if not m or (m.group("coeff") is None and m.group("var") is None):
            raise ConfigError(f"cannot parse polynomial term {term!r}")
        coeff = float(m.group("coeff")) if m.group("coeff") else 1.0
        power = 0
        if m.group("var"):
            power = int(m.group("pow")) if m.group("pow") else 1
        coeffs[power] = coeffs.get(power, 0.0) + sign * coeff
        sign = 1.0
    deg = max(coeffs)
    return [coeffs.get(k, 0.0) for k in range(deg + 1)]


def _parse_interval(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise ConfigError("interval must be 'a,b'")
    return float(parts[0]), float(parts[1])


def _parse_hbars(text: str) -> list[float]:
    try:
        vals = [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad hbar list {text!r}: {exc}") from None
    if not vals or any(v <= 0 for v in vals):
        raise ConfigError("hbar values must be positive")
    return vals


def _parse_levels(text: str) -> list[tuple[float, float]]:
    out = []
    for tok in text.split(","):
        if not tok.strip():
            continue
        parts = tok.split(":")
        if len(parts) != 2:
            raise ConfigError("levels must be 'offset:coupling,offset:coupling,...'")
        out.append((float(parts[0]), float(parts[1])))
    if not out:
        raise ConfigError("empty spectator level list")
    return out


def _model_from_args(args) -> "app.PencilModel":
    if getattr(args, "config", None):
        cfg = app.load_config(args.config)
        if args.out is None and cfg.out is not None:
            args.out = cfg.out
        if not getattr(args, "hbars", None):
            args.hbars = list(cfg.hbars)
        args.gamma = cfg.gamma
        args.tol = cfg.tol
        return cfg.build()
    interval = _parse_interval(args.interval) if args.interval else None
    name = args.model
    if name is None:
        raise ConfigError("--model (or --config) is required")
    if name == "dirac":
        kw = dict(E=args.E, u_coeffs=parse_poly(args.U), p=args.p)
        if interval:
            kw["interval"] = interval
        return app.model_dirac(**kw)
    if name == "dirac_tanh":
        kw = dict(E=args.E, p=args.p, center=args.center, degree=args.degree)
        if interval:
            kw["interval"] = interval
        return app.model_dirac_tanh(**kw)
    if name == "lz":
        kw = dict(slope=args.slope, gap=args.gap)
        if interval:
            kw["interval"] = interval
        return app.model_landau_zener(**kw)
    if name == "spectator":
        base_name = args.base
        if base_name == "dirac":
            base = app.model_dirac(
                E=args.E, u_coeffs=parse_poly(args.U), p=args.p,
                **({"interval": interval} if interval else {}),
            )
        elif base_name == "lz":
            base = app.model_landau_zener(
                slope=args.slope, gap=args.gap,
                **({"interval": interval} if interval else {}),
            )
        else:
            raise ConfigError(f"unknown spectator base '{base_name}'")
        return app.model_spectator(base, extra_levels=_parse_levels(args.levels))
    raise ConfigError(f"unknown model '{name}'")


def _emit(args, doc: dict, csv_tables: dict | None = None, figure_calls=None) -> None:
    text = app.render_json(doc)
    if args.out is None:
        sys.stdout.write(text)
        if csv_tables or figure_calls:
            log.info("no --out directory: CSV tables and figures skipped")
        return
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "report.json")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    log.info("wrote %s", path)
    for name, (header, rows) in (csv_tables or {}).items():
        cpath = os.path.join(args.out, name)
        app.write_csv(cpath, header, rows)
        log.info("wrote %s", cpath)
    if figure_calls and not args.no_figures:
        for name, fn in figure_calls:
            fpath = os.path.join(args.out, name)
            fn(fpath)
            log.info("wrote %s", fpath)


def cmd_analyze(args) -> int:
    model = _model_from_args(args)
    hbars = args.hbars or []
    report, table = app.analyze(
        model, hbars=hbars, gamma=args.gamma, tol=args.tol, basis=args.basis,
        with_empirical=not args.skip_empirical,
    )
    doc = report.to_dict()
    h_show = hbars[0] if hbars else 1e-3
    figures = [
        ("branches.png", lambda p: app.figure_branches(table, report.crossing, h_show, p))
    ]
    csv_tables = {"branches.csv": app.branch_csv_rows(table, report.crossing, h_show)}
    _emit(args, doc, csv_tables=csv_tables, figure_calls=figures)
    return 0


def cmd_oracle(args) -> int:
    model = _model_from_args(args)
    data = crossing_parameters(model)
    table = build_table(model, data)
    from .transition import transition_matrix

    tm = transition_matrix(data.nu, data.w)
    entries = []
    for h in args.hbars or [1e-3]:
        emp = empirical_transition(
            model, data, table, h, tol=args.tol, gamma=args.gamma, basis=args.basis
        )
        entries.append(
            {
                "hbar": h,
                "matrix": app._cmatrix(emp.matrix),
                "projection_residuals": [float(r) for r in emp.residuals],
                "error_fro": float(np.linalg.norm(emp.matrix - tm.entries)),
            }
        )
    doc = {
        "schema": app.SCHEMA_VERSION,
        "label": model.label,
        "reference": app._cmatrix(tm.entries),
        "empirical": entries,
    }
    _emit(args, doc)
    return 0


def cmd_sweep(args) -> int:
    model = _model_from_args(args)
    if not args.hbars or len(args.hbars) < 3:
        raise ConfigError("sweep needs --hbars with at least three values")
    sweep = hbar_sweep(
        model, args.hbars, tol=args.tol, gamma=args.gamma, basis=args.basis
    )
    doc = {
        "schema": app.SCHEMA_VERSION,
        "label": model.label,
        "nu": [sweep.data.nu.real, sweep.data.nu.imag],
        "w": sweep.data.w,
        "rows": [dict(r) for r in sweep.rows],
        "slope": sweep.slope,
        "monotone": sweep.monotone,
        "skipped": sweep.skipped,
    }
    header, rows = app.sweep_csv_rows(sweep)
    _emit(
        args,
        doc,
        csv_tables={"sweep.csv": (header, rows)},
        figure_calls=[("sweep.png", lambda p: app.figure_sweep(sweep, p))],
    )
    if not sweep.monotone and not sweep.skipped:
        log.warning("error decay is not monotone across the hbar ladder")
    return 0


def cmd_pcf(args) -> int:
    try:
        nu = complex(args.nu)
        t = complex(args.t)
    except ValueError as exc:
        raise ConfigError(f"bad complex literal: {exc}") from None
    val = dnu_pair(nu, t, t_switch=args.t_switch)
    doc = {
        "schema": app.SCHEMA_VERSION,
        "nu": [val.nu.real, val.nu.imag],
        "t": [val.t.real, val.t.imag],
        "d_nu": [val.d_nu.real, val.d_nu.imag],
        "d_nu_minus_1": [val.d_nu_minus_1.real, val.d_nu_minus_1.imag],
        "regime": val.regime,
        "est_error": val.est_error,
    }
    _emit(args, doc)
    return 0


def cmd_modes(args) -> int:
    model = _model_from_args(args)
    data = crossing_parameters(model)
    table = build_table(model, data)
    hbar = (args.hbars or [1e-3])[0]
    a, b = model.interval
    excl = exclusion_radius(data, hbar)
    csv_tables = {}
    mode_amp = {}
    mode_flux = {}
    mode_xs = {}
    g = model.metric
    for j in (0, 1):
        xs_all = []
        vecs = []
        phases = []
        flux = []
        for side, lo, hi in ((-1, a + 1e-9, data.x_star - 1.2 * excl), (1, data.x_star + 1.2 * excl, b - 1e-9)):
            if hi <= lo:
                continue
            for x in np.linspace(lo, hi, args.n // 2):
                vec = leading_mode(data, table, j, side, hbar, x)
                xs_all.append(x)
                vecs.append(vec)
                phases.append(phase_integral(data, table, j, side, hbar, x))
                flux.append(float(np.real(np.vdot(vec, g @ vec))))
        header, rows = app.mode_csv_rows(xs_all, vecs, phases, flux)
        csv_tables[f"mode{j + 1}.csv"] = (header, rows)
        mode_xs[j] = xs_all
        mode_amp[j] = vecs
        mode_flux[j] = flux

    taus = np.linspace(-min(8.0, hbar ** (-1.0 / 6.0)), min(8.0, hbar ** (-1.0 / 6.0)), args.n)
    inner_rows = []
    for tau in taus:
        a1, a2 = inner_leading(data, 1.0, 0.0, float(tau))
        vec = inner_full(data, 1.0, 0.0, hbar, float(tau))
        fl = float(np.real(np.vdot(vec, g @ vec)))
        inner_rows.append(
            [
                app._fmt_float(float(tau)),
                app._fmt_float(a1.real), app._fmt_float(a1.imag),
                app._fmt_float(a2.real), app._fmt_float(a2.imag),
                app._fmt_float(fl),
            ]
        )
    csv_tables["inner.csv"] = (
        ["tau", "re_a1", "im_a1", "re_a2", "im_a2", "flux"],
        inner_rows,
    )
    doc = {
        "schema": app.SCHEMA_VERSION,
        "label": model.label,
        "hbar": hbar,
        "exclusion_radius": excl,
        "samples": {"mode1": len(mode_xs[0]), "mode2": len(mode_xs[1]), "inner": len(taus)},
    }
    figs = [
        (
            "modes.png",
            lambda p: app.figure_modes(
                mode_xs[0], mode_amp[0], mode_amp[1], mode_flux[0], mode_flux[1], p
            ),
        )
    ]
    _emit(args, doc, csv_tables=csv_tables, figure_calls=figs)
    return 0


def _add_model_args(sp) -> None:
    sp.add_argument("--config", help="JSON config file (overrides model flags)")
    sp.add_argument("--model", choices=["dirac", "dirac_tanh", "lz", "spectator"])
    sp.add_argument("--E", type=float, default=0.0, help="energy parameter (dirac)")
    sp.add_argument("--U", default="x", help="potential polynomial, e.g. 'x - 0.3' (dirac)")
    sp.add_argument("--p", type=float, default=1.0, help="coupling strength (dirac)")
    sp.add_argument("--center", type=float, default=0.1, help="barrier center (dirac_tanh)")
    sp.add_argument("--degree", type=int, default=7, help="Taylor degree (dirac_tanh)")
    sp.add_argument("--slope", type=float, default=1.0, help="level slope (lz)")
    sp.add_argument("--gap", type=float, default=1.0, help="gap coupling (lz)")
    sp.add_argument("--base", choices=["dirac", "lz"], default="lz", help="spectator base model")
    sp.add_argument("--levels", default="5:0.3,-5:0.3", help="spectator 'offset:coupling' list")
    sp.add_argument("--interval", help="model interval 'a,b'")
    sp.add_argument("--hbar", "--hbars", dest="hbars", type=_parse_hbars, default=None,
                    help="comma-separated hbar values")
    sp.add_argument("--gamma", type=float, default=0.2, help="endpoint exponent offset")
    sp.add_argument("--tol", type=float, default=1e-10, help="integrator tolerance")
    sp.add_argument("--basis", choices=["exact", "order1", "order0"], default="exact",
                    help="projection basis for empirical matrices")
    sp.add_argument("--out", help="output directory (default: JSON to stdout)")
    sp.add_argument("--no-figures", action="store_true", help="skip PNG rendering")


# Every option above that consumes a value; --no-figures, --skip-empirical
# and -h/--help must stay out so they are never fused with a following token.
_VALUE_FLAGS = frozenset({
    "--config", "--model", "--E", "--U", "--p", "--center", "--degree",
    "--slope", "--gap", "--base", "--levels", "--interval", "--hbar",
    "--hbars", "--gamma", "--tol", "--basis", "--out", "--nu", "--t",
    "--t-switch", "--n",
})


def _fuse_dash_values(argv: list[str]) -> list[str]:
    """Join a value flag with a following leading-dash value.

    argparse reads a separate "-0.5j" or "-1,1" token as an option
    string, so "--nu -0.5j" dies with a usage error unless spelled
    "--nu=-0.5j"; fusing the pair up front accepts both forms.
    """
    fused = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        nxt = argv[i + 1] if i + 1 < len(argv) else None
        if (tok in _VALUE_FLAGS and nxt is not None and nxt.startswith("-")
                and nxt not in ("-", "-h") and not nxt.startswith("--")):
            fused.append(tok + "=" + nxt)
            i += 2
        else:
            fused.append(tok)
            i += 1
    return fused


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="modecross",
        description="Transition matrices for two-fold eigenvalue crossings",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("analyze", help="crossing parameters and transition matrix")
    _add_model_args(sp)
    sp.add_argument("--skip-empirical", action="store_true",
                    help="skip the direct-integration check")
    sp.set_defaults(fn=cmd_analyze)

    sp = sub.add_parser("oracle", help="empirical transition matrices")
    _add_model_args(sp)
    sp.set_defaults(fn=cmd_oracle)

    sp = sub.add_parser("sweep", help="error decay over an hbar ladder")
    _add_model_args(sp)
    sp.set_defaults(fn=cmd_sweep)

    sp = sub.add_parser("pcf", help="evaluate the Weber function pair")
    sp.add_argument("--nu", required=True, help="order, complex literal like '0.5j'")
    sp.add_argument("--t", required=True, help="argument, complex literal like '3+3j'")
    sp.add_argument("--t-switch", type=float, default=T_SWITCH)
    sp.add_argument("--out")
    sp.add_argument("--no-figures", action="store_true")
    sp.set_defaults(fn=cmd_pcf)

    sp = sub.add_parser("modes", help="sample canonical modes and inner solution")
    _add_model_args(sp)
    sp.add_argument("--n", type=int, default=200, help="samples per table")
    sp.set_defaults(fn=cmd_modes)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(message)s")
    parser = build_parser()
    if argv is None:
        argv = sys.argv[1:]
    args = parser.parse_args(_fuse_dash_values(list(argv)))
    try:
        return args.fn(args)
    except ModeCrossError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return exc.exit_code
