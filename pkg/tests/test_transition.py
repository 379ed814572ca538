"""Transition matrix: closed form, identities, and the matching route."""

import math

import numpy as np
import pytest

import modecross as mc
from modecross.transition import (
    asymptotic_limits,
    match_coefficients,
    polar_form,
    reflection_transmission,
    renumbered,
    transition_from_matching,
    transition_matrix,
)

# generated with mpmath (dps=40) from the entry formulas at nu = -+ i/2
DIRAC_T11 = complex(4.8104773809653517, 0.0)
DIRAC_T12 = complex(4.6269202441450793, 0.85574627495520441)
DIRAC_T21 = complex(4.6269202441450793, -0.85574627495520441)
LZ_T11 = complex(0.20787957635076191, 0.0)
LZ_T12 = complex(-0.96184222016164295, 0.17789217310143051)
LZ_T21 = complex(0.96184222016164295, 0.17789217310143051)
THETA_PRIME_HALF = 0.18288287202290343


def test_unavoidable_entries_frozen():
    tm = transition_matrix(-0.5j, -1)
    np.testing.assert_allclose(
        tm.entries,
        [[DIRAC_T11, DIRAC_T12], [DIRAC_T21, DIRAC_T11]],
        rtol=1e-12,
    )
    assert tm.theta_prime == pytest.approx(THETA_PRIME_HALF, rel=1e-12)


def test_avoided_entries_frozen():
    tm = transition_matrix(0.5j, 1)
    np.testing.assert_allclose(
        tm.entries,
        [[LZ_T11, LZ_T12], [LZ_T21, LZ_T11]],
        rtol=1e-12,
    )
    assert tm.theta_prime == pytest.approx(-THETA_PRIME_HALF, rel=1e-12)


@pytest.mark.parametrize("w", [-1, 1])
def test_pairing_identities_on_grid(w):
    for nu_abs in np.geomspace(1e-6, 10.0, 50):
        tm = transition_matrix(1j * w * nu_abs, w)
        e = tm.entries
        # det is a cancellation of terms ~ e^{2 pi |nu|}, so divide by them
        scale = max(abs(e[0, 0] * e[1, 1]), abs(e[0, 1] * e[1, 0]), 1.0)
        assert abs(tm.det() - 1.0) / scale < 1e-12
        assert max(tm.flux_residuals()) < 1e-12
        if w == 1:
            gram = e.conj().T @ e
            np.testing.assert_allclose(gram, np.eye(2), atol=1e-12)


@pytest.mark.parametrize("w, nu", [(-1, -0.5j), (1, 0.5j), (-1, -4.0j), (1, 0.03j)])
def test_polar_form_reconstructs_entries(w, nu):
    tm = transition_matrix(nu, w)
    form = polar_form(tm)
    rebuilt = form["magnitudes"] * np.exp(1j * form["phases"])
    np.testing.assert_allclose(rebuilt, tm.entries, rtol=1e-12, atol=1e-15)


def test_diagonal_magnitude_closed_form():
    assert abs(transition_matrix(-0.5j, -1).entries[0, 0]) == pytest.approx(
        math.exp(math.pi / 2), rel=1e-13
    )
    assert abs(transition_matrix(0.5j, 1).entries[0, 0]) == pytest.approx(
        math.exp(-math.pi / 2), rel=1e-13
    )


@pytest.mark.parametrize("w", [-1, 1])
def test_theta_prime_small_nu_limit(w):
    assert transition_matrix(0.0j, w).theta_prime == pytest.approx(-w * math.pi / 4)
    near = transition_matrix(1j * w * 1e-9, w).theta_prime
    assert near == pytest.approx(-w * math.pi / 4, abs=1e-7)


def test_zero_exponent_gives_identity():
    tm = transition_matrix(0.0j, -1)
    np.testing.assert_array_equal(tm.entries, np.eye(2))


def test_asymptotic_limits_large_nu():
    limit, dev = asymptotic_limits(5j, 1)
    np.testing.assert_array_equal(limit, [[0.0, -1.0], [1.0, 0.0]])
    assert dev < 2e-2
    limit, dev = asymptotic_limits(-5j, -1)
    np.testing.assert_array_equal(limit, np.ones((2, 2)))
    assert dev < 2e-2
    with pytest.raises(mc.ValidityError):
        asymptotic_limits(2.9j, 1)


def test_renumbered_reads_as_transmission():
    tm = transition_matrix(0.5j, 1)
    rn = renumbered(tm)
    np.testing.assert_allclose(rn[:, 0], -tm.entries[:, 1], atol=0.0)
    np.testing.assert_allclose(rn[:, 1], tm.entries[:, 0], atol=0.0)
    assert abs(rn[0, 0]) == pytest.approx(math.sqrt(1.0 - math.exp(-math.pi)), rel=1e-12)
    assert abs(rn[1, 0]) == pytest.approx(math.exp(-math.pi / 2), rel=1e-12)


def test_reflection_transmission_unavoidable():
    tm = transition_matrix(-0.5j, -1)
    r, tc = reflection_transmission(tm)
    assert abs(r) == pytest.approx(math.sqrt(1.0 - math.exp(-math.pi)), rel=1e-12)
    assert abs(tc) == pytest.approx(math.exp(-math.pi / 2), rel=1e-12)
    assert abs(r) ** 2 + abs(tc) ** 2 == pytest.approx(1.0, rel=1e-12)
    with pytest.raises(mc.InterpretationError):
        reflection_transmission(transition_matrix(0.5j, 1))


def test_domain_validation():
    with pytest.raises(mc.DomainError):
        transition_matrix(0.5j, 0)
    with pytest.raises(mc.DomainError):
        transition_matrix(0.3 + 0.5j, 1)
    with pytest.raises(mc.DomainError):
        transition_matrix(-0.5j, 1)


def test_match_coefficients_is_linear(dirac_data):
    base = match_coefficients(dirac_data, 0.4 - 0.2j, 1.3 + 0.6j)
    scaled = match_coefficients(dirac_data, 2j * (0.4 - 0.2j), 2j * (1.3 + 0.6j))
    for side in ("left", "right"):
        np.testing.assert_allclose(scaled[side], 2j * np.asarray(base[side]), rtol=1e-14)


@pytest.mark.parametrize("name", ["dirac", "lz"])
def test_matching_route_agrees_with_closed_form(name, request):
    data = request.getfixturevalue(f"{name}_data")
    matched = transition_from_matching(data)
    closed = transition_matrix(data.nu, data.w).entries
    np.testing.assert_allclose(matched, closed, rtol=1e-12, atol=1e-13)
