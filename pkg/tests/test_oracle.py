"""Direct integration oracle: flux conservation, projection, sweeps."""

import math
import warnings

import numpy as np
import pytest
from scipy.linalg import expm

import modecross as mc
from modecross.oracle import (
    TrajectoryRecord,
    empirical_transition,
    hbar_sweep,
    integrate,
    project_onto_modes,
)

I2 = np.eye(2)
SX = np.array([[0.0, 1.0], [1.0, 0.0]])
SZ = np.diag([1.0, -1.0])


def test_constant_pencil_matches_matrix_exponential():
    k0 = np.array([[0.3, 0.1], [0.1, -0.2]])
    model = mc.PencilModel(k_coeffs=[k0], b_coeffs=[SX], metric=I2, interval=(-1.0, 1.0))
    hbar = 0.05
    psi0 = np.array([1.0, -0.5j])
    rec = integrate(model, hbar, -0.4, 0.6, psi0, tol=1e-12)
    h = k0 + math.sqrt(hbar) * SX
    exact = expm(1j / hbar * h * 1.0) @ psi0
    np.testing.assert_allclose(rec.psis[-1], exact, rtol=1e-9, atol=1e-11)


@pytest.mark.parametrize("name", ["dirac", "lz"])
def test_flux_conserved_along_trajectory(name, request):
    model = request.getfixturevalue(f"{name}_model")
    rec = integrate(model, 1e-2, -0.3, 0.3, np.array([1.0, 0.5]), tol=1e-10)
    assert rec.flux_drift() < 1e-7


def test_time_reversal_round_trip(dirac_model):
    psi0 = np.array([1.0, 0.5j])
    fwd = integrate(dirac_model, 1e-2, -0.4, 0.4, psi0, tol=1e-10)
    back = integrate(dirac_model, 1e-2, 0.4, -0.4, fwd.psis[-1], tol=1e-10)
    np.testing.assert_allclose(back.psis[-1], psi0, atol=1e-8)


def test_strip_mean_phase_keeps_state_and_saves_steps():
    # mean eigenvalue 2 rotates the phase much faster than the +-x split
    model = mc.PencilModel(
        k_coeffs=[2.0 * I2, SZ], b_coeffs=[SX], metric=I2, interval=(-1.0, 1.0)
    )
    psi0 = np.array([1.0, 0.3])
    plain = integrate(model, 1e-2, -0.4, 0.4, psi0, tol=1e-10)
    stripped = integrate(model, 1e-2, -0.4, 0.4, psi0, tol=1e-10, strip_mean_phase=True)
    np.testing.assert_allclose(stripped.psis[-1], plain.psis[-1], atol=1e-7)
    assert stripped.stats["stripped"] and not plain.stats["stripped"]
    assert stripped.stats["nfev"] < plain.stats["nfev"]


def test_integrate_validation():
    model = mc.model_dirac()
    with pytest.raises(mc.ConfigError):
        integrate(model, 1e-2, -0.3, 0.3, np.array([1.0, 0.0]), tol=1e-13)
    with pytest.raises(mc.ConfigError):
        integrate(model, 1e-2, -0.3, 0.3, np.array([1.0, 0.0]), tol=1e-5)
    with pytest.raises(mc.ConfigError):
        integrate(model, 1e-2, 0.3, 0.3, np.array([1.0, 0.0]))
    with pytest.raises(mc.ConfigError):
        integrate(model, 1e-2, -0.3, 0.3, np.zeros(2))
    with pytest.raises(mc.ConfigError):
        integrate(model, 1e-2, -0.3, 0.3, np.array([1.0, 0.0, 0.0]))


def test_empirical_transition_reproduces_scattering(dirac_model, dirac_data, dirac_table):
    emp = empirical_transition(dirac_model, dirac_data, dirac_table, 1e-3)
    assert isinstance(emp.residuals, tuple) and len(emp.residuals) == 2
    assert isinstance(emp.flux_residuals, tuple) and len(emp.flux_residuals) == 2
    assert max(emp.residuals) < 1e-6
    assert max(emp.flux_residuals) < 1e-8
    assert abs(emp.reflection()) == pytest.approx(math.sqrt(1.0 - math.exp(-math.pi)), abs=5e-3)
    assert abs(emp.tunneling()) == pytest.approx(math.exp(-math.pi / 2), abs=5e-3)


def test_endpoints_need_room_beyond_exclusion():
    model = mc.model_dirac(interval=(-0.02, 0.02))
    data = mc.crossing_parameters(model)
    table = mc.build_table(model, data)
    with pytest.raises(mc.ValidityError):
        empirical_transition(model, data, table, 1e-2)


def test_projection_flags_spectator_leakage(spectator_model, spectator_data, spectator_table):
    x_e = 0.35
    psi = spectator_table.mode(0, x_e).astype(complex) + 0.3 * spectator_table.mode(2, x_e)
    fake = TrajectoryRecord(
        model=spectator_model, hbar=1e-3, tol=1e-10,
        xs=np.array([0.0, x_e]), psis=np.array([psi, psi]),
        flux=np.array([1.0, 1.0]), stats={},
    )
    with pytest.warns(mc.ProjectionWarning):
        _, _, resid = project_onto_modes(fake, spectator_data, spectator_table, 1)
    assert resid > 0.05


def test_hbar_sweep_reports_decay(lz_model):
    sweep = hbar_sweep(lz_model, [3e-2, 1e-2, 3e-3])
    assert [r["hbar"] for r in sweep.rows] == [3e-2, 1e-2, 3e-3]
    assert not sweep.skipped
    assert sweep.monotone
    assert sweep.slope is not None and sweep.slope > 0.1
    for row in sweep.rows:
        assert {"hbar", "err_fro", "err_t11", "err_t12", "err_t21", "err_t22", "proj_residual"} <= set(row)
    np.testing.assert_allclose(sweep.reference.det(), 1.0, rtol=1e-12)
    with pytest.raises(mc.ConfigError):
        hbar_sweep(lz_model, [1e-2, 1e-3])
