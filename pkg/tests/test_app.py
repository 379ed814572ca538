"""Model catalog, configuration, report emission, and the CLI."""

import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import modecross as mc
from modecross import app
from modecross.cli import main, parse_poly
from modecross.oracle import SweepResult
from modecross.transition import transition_matrix

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


# -- catalog models -----------------------------------------------------------


def test_tanh_taylor_coefficients():
    np.testing.assert_allclose(
        mc.tanh_taylor_coeffs(7),
        [0.0, 1.0, 0.0, -1.0 / 3.0, 0.0, 2.0 / 15.0, 0.0, -17.0 / 315.0],
        rtol=1e-15,
    )
    assert mc.tanh_taylor_coeffs(3) == mc.tanh_taylor_coeffs(7)[:4]
    with pytest.raises(mc.ConfigError):
        mc.tanh_taylor_coeffs(0)
    with pytest.raises(mc.ConfigError):
        mc.tanh_taylor_coeffs(8)


def test_model_builders_reject_bad_shapes():
    with pytest.raises(mc.ModelError):
        mc.model_dirac(u_coeffs=(0.0, 0.0, 1.0))  # double root
    with pytest.raises(mc.ModelError):
        mc.model_dirac(u_coeffs=(-0.25, 0.0, 1.0))  # two simple roots
    with pytest.raises(mc.ModelError):
        mc.model_landau_zener(slope=0.0)
    with pytest.raises(mc.ModelError):
        mc.model_spectator(mc.model_dirac(), extra_levels=((0.2, 0.1),))


# -- configuration ------------------------------------------------------------


def test_model_config_round_trip():
    raw = {
        "model": {"name": "dirac", "p": 2.0},
        "interval": [-0.8, 0.9],
        "hbars": [1e-2, 1e-3],
        "gamma": 0.25,
        "tol": 1e-9,
        "out": "results",
    }
    cfg = mc.ModelConfig.from_dict(raw)
    again = mc.ModelConfig.from_dict(cfg.to_dict())
    assert again == cfg
    model = cfg.build()
    assert model.interval == (-0.8, 0.9)
    np.testing.assert_allclose(model.b_at(0.0), [[0.0, -2.0j], [2.0j, 0.0]])


@pytest.mark.parametrize(
    "raw",
    [
        {"model": {"name": "dirac"}, "flavor": "blue"},
        {"model": {"name": "dirac"}, "pencil": {"dim": 2}},
        {},
        {"model": "dirac"},
        {"model": {"name": "dirac"}, "interval": [0, 1, 2]},
        {"model": {"name": "dirac"}, "gamma": 0.6},
        {"model": {"name": "dirac"}, "hbars": [1e-3, -1e-4]},
        {"model": {"name": "nonesuch"}},
    ],
)
def test_model_config_rejects(raw):
    with pytest.raises(mc.ConfigError):
        mc.ModelConfig.from_dict(raw).build()


def test_inline_pencil_config():
    z = [[0.0, 0.0], [0.0, 0.0]]

    def mat(m):
        return [[[float(v), 0.0] for v in row] for row in m]

    raw = {
        "pencil": {
            "dim": 2,
            "k_coeffs": [mat([[0, 0], [0, 0]]), mat([[1, 0], [0, -1]])],
            "b_coeffs": [mat([[0, 1], [1, 0]])],
            "metric": mat([[1, 0], [0, 1]]),
        },
        "interval": [-1.0, 1.0],
    }
    model = mc.ModelConfig.from_dict(raw).build()
    np.testing.assert_allclose(model.k_at(0.5), [[0.5, 0.0], [0.0, -0.5]])
    raw["pencil"]["dim"] = 3
    with pytest.raises(mc.ConfigError):
        mc.ModelConfig.from_dict(raw).build()
    raw["pencil"]["dim"] = 2
    raw["pencil"]["metric"] = [[1.0, 0.0]]
    with pytest.raises(mc.ConfigError):
        mc.ModelConfig.from_dict(raw)
    del raw["pencil"]["metric"]
    with pytest.raises(mc.ConfigError):
        mc.ModelConfig.from_dict(raw)


def test_load_config(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"model": {"name": "lz"}, "hbars": [1e-2]}))
    cfg = mc.load_config(str(path))
    assert cfg.model == {"name": "lz"} and cfg.hbars == [1e-2]
    with pytest.raises(mc.ConfigError):
        mc.load_config(str(tmp_path / "absent.json"))
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(mc.ConfigError):
        mc.load_config(str(bad))


# -- deterministic JSON and CSV ----------------------------------------------


def test_render_json_is_deterministic_and_sorted():
    doc = {"beta": [1.0, 2.5], "alpha": {"y": True, "x": None}, "n": 3}
    text = mc.render_json(doc)
    assert text == mc.render_json(dict(reversed(doc.items())))
    assert text.endswith("\n")
    assert text.index('"alpha"') < text.index('"beta"') < text.index('"n"')
    parsed = json.loads(text)
    assert parsed == {"beta": [1.0, 2.5], "alpha": {"y": True, "x": None}, "n": 3}


def test_render_json_float_formats():
    assert mc.render_json({"a": 1.0, "b": 0.1}) == '{\n  "a": 1.0,\n  "b": 0.10000000000000001\n}\n'
    assert mc.render_json({"v": []}) == '{\n  "v": []\n}\n'
    with pytest.raises(mc.PrecisionError):
        mc.render_json({"a": float("nan")})
    with pytest.raises(mc.ConfigError):
        mc.render_json({"a": {1, 2}})


def test_write_csv_uses_crlf(tmp_path):
    path = tmp_path / "table.csv"
    app.write_csv(str(path), ["x", "y"], [["1.0", "2.0"], ["3.0", "4.5"]])
    raw = path.read_bytes()
    assert raw == b"x,y\r\n1.0,2.0\r\n3.0,4.5\r\n"
    with open(path, newline="") as fh:
        assert list(csv.reader(fh)) == [["x", "y"], ["1.0", "2.0"], ["3.0", "4.5"]]


def test_branch_csv_rows_window(dirac_table, dirac_data):
    header, rows = app.branch_csv_rows(dirac_table, dirac_data, 1e-2)
    assert header == ["x", "beta_1", "beta_2", "perturbed_beta_1", "perturbed_beta_2"]
    assert len(rows) == len(dirac_table.xs)
    mid = min(rows, key=lambda r: abs(float(r[0])))
    assert mid[3] != "" and mid[4] != ""
    assert rows[0][3] == "" and rows[-1][4] == ""


def test_mode_csv_rows_shape():
    header, rows = app.mode_csv_rows(
        [0.1], [np.array([1 + 2j, 3 + 4j])], [0.5 - 0.25j], [1.0]
    )
    assert header == ["x", "re_c0", "im_c0", "re_c1", "im_c1", "phase_re", "phase_im", "flux"]
    assert rows == [["0.10000000000000001", "1.0", "2.0", "3.0", "4.0", "0.5", "-0.25", "1.0"]]


def test_sweep_csv_rows_columns():
    row = {
        "hbar": 1e-2, "err_fro": 0.05, "err_t11": 0.01, "err_t12": 0.02,
        "err_t21": 0.03, "err_t22": 0.04, "proj_residual": 1e-9,
    }
    sweep = SweepResult(
        rows=[row], slope=0.4, monotone=True, skipped=False,
        reference=transition_matrix(0.5j, 1), data=None,
    )
    header, rows = app.sweep_csv_rows(sweep)
    assert header[0] == "hbar" and len(rows) == 1
    assert rows[0][0] == "0.01" and rows[0][-1] == "1.0000000000000001e-09"


# -- analysis reports ---------------------------------------------------------


def test_analyze_report_dirac(dirac_model, dirac_data, dirac_table):
    report, table = mc.analyze(
        dirac_model, hbars=[1e-2], data=dirac_data, table=dirac_table
    )
    assert table is dirac_table
    doc = report.to_dict()
    assert doc["schema"] == 1
    assert doc["crossing"]["classification"] == "unavoidable"
    assert doc["crossing"]["x_star"] == pytest.approx(0.0, abs=1e-10)
    assert doc["reading"]["type"] == "reflection_transmission"
    assert doc["reading"]["R_abs"] == pytest.approx(math.sqrt(1 - math.exp(-math.pi)), rel=1e-12)
    assert doc["reading"]["Tc_abs"] == pytest.approx(math.exp(-math.pi / 2), rel=1e-12)
    (entry,) = doc["empirical"]
    assert entry["hbar"] == 1e-2
    assert entry["error_fro"] < 1.0
    assert max(entry["flux_residuals"]) < 1e-8


def test_analyze_report_avoided(lz_model, lz_data, lz_table):
    report, _ = mc.analyze(
        lz_model, data=lz_data, table=lz_table, with_empirical=False
    )
    doc = report.to_dict()
    assert doc["crossing"]["classification"] == "avoided"
    assert doc["reading"]["type"] == "transmission_excitation"
    assert doc["reading"]["transmission_abs"] == pytest.approx(
        math.sqrt(1 - math.exp(-math.pi)), rel=1e-12
    )
    assert "empirical" not in doc


def test_report_rejects_tampered_matrix(lz_model, lz_data, lz_table):
    report, _ = mc.analyze(lz_model, data=lz_data, table=lz_table, with_empirical=False)
    report.tm.entries[0, 0] *= 1.5
    with pytest.raises(mc.PrecisionError):
        report.to_dict()


# -- polynomial parsing -------------------------------------------------------


@pytest.mark.parametrize(
    "text, expect",
    [
        ("x", [0.0, 1.0]),
        ("x - 0.3", [-0.3, 1.0]),
        ("-x", [0.0, -1.0]),
        ("-0.5 + x**2", [-0.5, 0.0, 1.0]),
        ("1 - -2*x", [1.0, 2.0]),
        ("1 + 0.5*x**3", [1.0, 0.0, 0.0, 0.5]),
        ("2x^2", [0.0, 0.0, 2.0]),
        ("2e-3", [2e-3]),
        ("x**2 - x", [0.0, -1.0, 1.0]),
        ("0,1,0,-0.33", [0.0, 1.0, 0.0, -0.33]),
    ],
)
def test_parse_poly_forms(text, expect):
    assert parse_poly(text) == expect


@pytest.mark.parametrize("text", ["", "x+", "1++", "spam", "1,two", "x**-2"])
def test_parse_poly_rejects(text):
    with pytest.raises(mc.ConfigError):
        parse_poly(text)


@settings(max_examples=40, deadline=None)
@given(
    st.lists(
        st.tuples(st.floats(min_value=0.001, max_value=50.0), st.booleans()),
        min_size=1,
        max_size=5,
    )
)
def test_parse_poly_round_trip(terms):
    coeffs = [(-m if neg else m) for m, neg in terms]
    parts = []
    for k, c in enumerate(coeffs):
        mag = repr(abs(c))
        body = mag if k == 0 else (f"{mag}*x" if k == 1 else f"{mag}*x**{k}")
        parts.append(("-" if c < 0 else "+") + body)
    expr = " ".join(parts).lstrip("+")
    assert parse_poly(expr) == coeffs


# -- command line -------------------------------------------------------------


def test_cli_analyze_stdout(capsys):
    code = main(["analyze", "--model", "dirac", "--skip-empirical"])
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["label"] == "dirac"
    assert doc["crossing"]["x_star"] == pytest.approx(0.0, abs=1e-10)
    assert "empirical" not in doc


def test_cli_analyze_writes_files(tmp_path, capsys):
    out1 = tmp_path / "a"
    out2 = tmp_path / "b"
    argv = ["analyze", "--model", "lz", "--skip-empirical"]
    assert main(argv + ["--out", str(out1)]) == 0
    assert main(argv + ["--out", str(out2), "--no-figures"]) == 0
    capsys.readouterr()
    report = out1 / "report.json"
    assert json.loads(report.read_text())["label"] == "lz"
    # identical configuration yields byte-identical reports
    assert report.read_bytes() == (out2 / "report.json").read_bytes()
    assert (out1 / "branches.csv").read_bytes().count(b"\r\n") > 100
    png = (out1 / "branches.png").read_bytes()
    assert png.startswith(PNG_MAGIC) and len(png) > 5000
    assert not (out2 / "branches.png").exists()


def test_cli_pcf_matches_library(capsys):
    from modecross.pcf import dnu_pair

    assert main(["pcf", "--nu", "0.5j", "--t", "2+0j"]) == 0
    doc = json.loads(capsys.readouterr().out)
    val = dnu_pair(0.5j, 2.0 + 0.0j)
    assert complex(*doc["d_nu"]) == pytest.approx(val.d_nu, rel=1e-15)
    assert doc["regime"] == "series"


def test_cli_accepts_leading_dash_values(capsys):
    from modecross.pcf import dnu_pair

    assert main(["pcf", "--nu", "-0.5j", "--t", "-2+0j"]) == 0
    doc = json.loads(capsys.readouterr().out)
    val = dnu_pair(-0.5j, -2.0 + 0.0j)
    assert complex(*doc["d_nu"]) == pytest.approx(val.d_nu, rel=1e-15)

    code = main(
        ["analyze", "--model", "dirac", "--interval", "-1,1", "--skip-empirical"]
    )
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["crossing"]["classification"] == "unavoidable"


def test_fuse_dash_values_leaves_flags_alone():
    from modecross.cli import _fuse_dash_values

    fused = _fuse_dash_values(["pcf", "--nu", "-0.5j", "--t", "2", "--no-figures"])
    assert fused == ["pcf", "--nu=-0.5j", "--t", "2", "--no-figures"]
    # a following option token is a separate mistake argparse should report
    assert _fuse_dash_values(["pcf", "--nu", "--t", "2"]) == ["pcf", "--nu", "--t", "2"]
    assert _fuse_dash_values(["pcf", "--nu", "-h"]) == ["pcf", "--nu", "-h"]
    assert _fuse_dash_values(["analyze", "--out", "-"]) == ["analyze", "--out", "-"]


def test_cli_modes_writes_tables(tmp_path, capsys):
    out = tmp_path / "m"
    code = main(
        ["modes", "--model", "lz", "--hbar", "1e-2", "--n", "24", "--out", str(out)]
    )
    capsys.readouterr()
    assert code == 0
    for name in ("report.json", "mode1.csv", "mode2.csv", "inner.csv"):
        assert (out / name).exists()
    assert (out / "modes.png").read_bytes().startswith(PNG_MAGIC)
    doc = json.loads((out / "report.json").read_text())
    assert doc["samples"]["mode1"] == 24 and doc["samples"]["inner"] == 24


def test_cli_sweep_writes_ladder(tmp_path, capsys):
    out = tmp_path / "s"
    code = main(
        ["sweep", "--model", "lz", "--hbars", "3e-2,1e-2,3e-3", "--out", str(out)]
    )
    capsys.readouterr()
    assert code == 0
    doc = json.loads((out / "report.json").read_text())
    assert [r["hbar"] for r in doc["rows"]] == [3e-2, 1e-2, 3e-3]
    assert doc["slope"] > 0.1 and doc["monotone"] is True
    with open(out / "sweep.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0][0] == "hbar" and len(rows) == 4
    assert (out / "sweep.png").read_bytes().startswith(PNG_MAGIC)


def test_cli_exit_codes(capsys):
    assert main(["analyze", "--model", "dirac", "--interval", "0,1,2"]) == 2
    assert main(["sweep", "--model", "lz", "--hbars", "1e-2,1e-3"]) == 2
    assert main(["analyze", "--model", "dirac", "--U", "x**2"]) == 3
    assert main(["pcf", "--nu", "0.5j", "--t", "100+0j"]) == 4
    capsys.readouterr()


def test_cli_config_file(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"model": {"name": "dirac"}, "hbars": [1e-2]}))
    assert main(["analyze", "--config", str(cfg), "--skip-empirical"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["label"] == "dirac"


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "modecross", "pcf", "--nu", "0.5j", "--t", "1+1j"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["regime"] == "series"
