"""Shared fixtures: the catalog models with their crossing data and tables.

Everything here is read-only for the tests, so the expensive pieces
(mode tables take about half a second each) are built once per session.
"""

import pytest

import modecross as mc


@pytest.fixture(scope="session")
def dirac_model():
    return mc.model_dirac(E=0.0, u_coeffs=[0.0, 1.0], p=1.0)


@pytest.fixture(scope="session")
def dirac_data(dirac_model):
    return mc.crossing_parameters(dirac_model)


@pytest.fixture(scope="session")
def dirac_table(dirac_model, dirac_data):
    return mc.build_table(dirac_model, dirac_data)


@pytest.fixture(scope="session")
def lz_model():
    return mc.model_landau_zener(slope=1.0, gap=1.0)


@pytest.fixture(scope="session")
def lz_data(lz_model):
    return mc.crossing_parameters(lz_model)


@pytest.fixture(scope="session")
def lz_table(lz_model, lz_data):
    return mc.build_table(lz_model, lz_data)


@pytest.fixture(scope="session")
def tanh_model():
    return mc.model_dirac_tanh(E=0.0, p=1.0, center=0.1)


@pytest.fixture(scope="session")
def tanh_data(tanh_model):
    return mc.crossing_parameters(tanh_model)


@pytest.fixture(scope="session")
def tanh_table(tanh_model, tanh_data):
    return mc.build_table(tanh_model, tanh_data)


@pytest.fixture(scope="session")
def spectator_model(dirac_model):
    return mc.model_spectator(dirac_model)


@pytest.fixture(scope="session")
def spectator_data(spectator_model):
    return mc.crossing_parameters(spectator_model)


@pytest.fixture(scope="session")
def spectator_table(spectator_model, spectator_data):
    return mc.build_table(spectator_model, spectator_data)
