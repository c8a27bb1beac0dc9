"""
Tests for steady-state observables
"""

import sys
from pathlib import Path

import numpy as np
import pytest
from scipy.stats import poisson

# Add src to path
sys.path.insert(0, str(Path(__file__).parent / "src"))

from analysis.saturation import coherent_amplitudes, poisson_weight
from errors import ConfigError
from quantum.hilbert import HilbertSpace, basis_index
from quantum.model import SystemParams, liouvillian
from quantum.observables import (
    cavity_population,
    diagonal_element,
    ensemble_population,
    ensemble_population_from_diagonal,
    expectation,
    ground_diagonals,
    observable_set,
    scattering_signal,
)
from quantum.steady import DensityMatrix, steady_state

BASELINE = SystemParams()


def solve(params, n_max):
    return steady_state(liouvillian(params, HilbertSpace(params.n_emitters, n_max)))


def random_state(rng, space):
    m = rng.normal(size=(space.dim, space.dim)) + 1j * rng.normal(size=(space.dim, space.dim))
    rho = m @ m.conj().T
    return DensityMatrix(rho / np.trace(rho), space)


def test_expectation_of_identity_is_one():
    space = HilbertSpace(2, 2)
    rho = random_state(np.random.default_rng(0), space)
    assert expectation(space.identity(), rho) == pytest.approx(1.0, abs=1e-12)


def test_photon_number_of_fock_state():
    space = HilbertSpace(2, 3)
    rho = DensityMatrix.pure(basis_index(2, (0, 0), space), space)
    assert cavity_population(rho) == pytest.approx(2.0)


def test_expectation_matches_dense_trace():
    rng = np.random.default_rng(11)
    space = HilbertSpace(1, 3)
    rho = random_state(rng, space)
    m = rng.normal(size=(space.dim, space.dim)) + 1j * rng.normal(size=(space.dim, space.dim))
    op = m + m.conj().T
    value = expectation(op, rho)
    assert abs(value - np.trace(op @ rho.data)) < 1e-12
    assert abs(value.imag) < 1e-10


def test_expectation_dimension_mismatch():
    rho = DensityMatrix.pure(0, HilbertSpace(1, 2))
    with pytest.raises(ConfigError):
        expectation(HilbertSpace(1, 3).identity(), rho)


def test_vacuum_diagonals():
    space = HilbertSpace(2, 4)
    rho = DensityMatrix.pure(0, space)
    diagonals = ground_diagonals(rho)
    assert diagonals[0] == 1.0
    assert np.all(diagonals[1:] == 0.0)
    assert diagonal_element(rho, 0) == 1.0


def test_diagonals_padded_to_requested_count():
    space = HilbertSpace(2, 2)
    rho = DensityMatrix.pure(basis_index(2, (0, 0), space), space)
    np.testing.assert_array_equal(ground_diagonals(rho, 6), [0, 0, 1, 0, 0, 0])


def test_displaced_vacuum_diagonals_are_poisson():
    space = HilbertSpace(1, 6)
    rho = DensityMatrix.pure(0, space, displacement=1.2j)
    np.testing.assert_allclose(ground_diagonals(rho, 30), poisson.pmf(np.arange(30), 1.44),
                               atol=1e-12)
    assert cavity_population(rho) == pytest.approx(1.44, rel=1e-12)


def test_diagonal_element_out_of_range():
    rho = DensityMatrix.pure(0, HilbertSpace(1, 2))
    with pytest.raises(ConfigError):
        diagonal_element(rho, 3)


def test_uncoupled_diagonals_are_poisson():
    params = BASELINE.with_updates(g_col=0.0, omega_drive_amp=0.02, n_emitters=2)
    rho = solve(params, 10)
    alpha_sq = 0.02 ** 2 / 0.03 ** 2
    np.testing.assert_allclose(ground_diagonals(rho)[:7], poisson.pmf(np.arange(7), alpha_sq),
                               atol=1e-9)


def test_single_photon_population_follows_coupled_poisson():
    params = BASELINE.with_updates(omega_drive_amp=1e-3 * BASELINE.g_col)
    rho = solve(params, 4)
    expected = poisson_weight(coherent_amplitudes(params).alpha_c_sq, 1)
    assert diagonal_element(rho, 1) == pytest.approx(expected, rel=0.05)


def test_ensemble_population_two_ways():
    params = BASELINE.with_updates(n_emitters=3, omega_drive_amp=0.01)
    rho = solve(params, 3)
    assert abs(ensemble_population(rho) - ensemble_population_from_diagonal(rho)) < 1e-12


def test_diagonal_completeness_and_photon_sum():
    params = BASELINE.with_updates(n_emitters=2, omega_drive_amp=0.02)
    rho = solve(params, 5)
    diagonal = np.real(np.diag(rho.data))
    assert abs(np.sum(diagonal) - 1.0) < 1e-10
    assert abs(cavity_population(rho) - np.dot(rho.space.photon_numbers(), diagonal)) < 1e-12
    assert np.sum(ground_diagonals(rho)) <= 1.0 + 1e-10


def test_scattering_signal():
    rho = solve(BASELINE.with_updates(omega_drive_amp=0.0075, g_col=0.0), 6)
    photons = cavity_population(rho)

    full = BASELINE.with_updates(gamma_c_rad=BASELINE.gamma_c)
    half = BASELINE.with_updates(gamma_c_rad=BASELINE.gamma_c / 2)
    dark = BASELINE.with_updates(gamma_c_rad=0.0)

    assert photons == pytest.approx(0.0625, rel=1e-8)
    assert scattering_signal(full, rho) == pytest.approx(0.0625 * 0.03, rel=1e-8)
    assert scattering_signal(half, rho) == pytest.approx(scattering_signal(full, rho) / 2)
    assert scattering_signal(dark, rho) == 0.0


def test_observable_set_row():
    params = BASELINE.with_updates(n_emitters=2)
    rho = solve(params, 3)
    observables = observable_set(params, rho)
    row = observables.to_row(include_diagonals=True)

    assert observables.cavity_pop >= -1e-10
    assert -1e-10 <= observables.ensemble_pop <= params.n_emitters
    assert [k for k in row if k.startswith("rho_")] == ["rho_0G", "rho_1G", "rho_2G", "rho_3G"]
    assert row["scattering"] == pytest.approx(params.gamma_c_rad * observables.cavity_pop)
