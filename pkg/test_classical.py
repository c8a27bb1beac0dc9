"""
Tests for the coupled-oscillator analytics and the classical ODE oracle
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add src to path
sys.path.insert(0, str(Path(__file__).parent / "src"))

from classical.oscillators import (
    classical_ode_oracle,
    co_amplitudes,
    co_populations,
    effective_drive,
    quantum_to_classical_map,
    suppression_ratio,
    suppression_ratio_literal,
    timescale_ratio_population,
    uncoupled_co_population,
    uncoupled_population,
    weak_resonant_population,
)
from errors import ConfigError, SolverError
from quantum.model import SystemParams

BASELINE = SystemParams()  # C = 400, Omega_d = 0.25 g_col


def random_params(rng):
    return SystemParams(
        gamma_c=rng.uniform(0.005, 0.2),
        gamma_c_rad=0.0,
        gamma_e=rng.uniform(1e-4, 0.05),
        g_col=rng.uniform(0.005, 0.1),
        n_emitters=int(rng.integers(1, 5)),
        omega_drive_amp=rng.uniform(1e-4, 0.05),
    )


class TestClosedForm:
    def test_baseline_weak_drive_population(self):
        n_c, _ = co_populations(BASELINE)
        assert n_c == pytest.approx(3.886e-7, rel=1e-3)

    def test_zero_drive(self):
        assert co_populations(BASELINE.with_updates(omega_drive_amp=0.0)) == (0.0, 0.0)

    def test_uncoupled_unit_population(self):
        params = SystemParams(g_col=0.0, omega_drive_amp=0.03)
        n_c, n_ens = co_populations(params)
        assert n_c == pytest.approx(1.0, rel=1e-12)
        assert n_ens == 0.0
        assert uncoupled_co_population(params) == pytest.approx(1.0, rel=1e-12)

    def test_undamped_resonance_fails(self):
        params = SystemParams(gamma_c=0.0, gamma_c_rad=0.0, gamma_e=0.0, g_col=0.0)
        with pytest.raises(SolverError):
            co_amplitudes(params)

    def test_frequency_domain_residual(self):
        params = BASELINE.with_updates(n_emitters=3)
        wd = 1.004
        amplitudes = co_amplitudes(params, wd)
        coupling = 2 * params.g * np.sqrt(params.omega_c * params.omega_e)
        force = params.omega_drive_amp * np.sqrt(2 * params.omega_c)

        cavity = ((params.omega_c ** 2 - wd ** 2 + 1j * wd * params.gamma_c) * amplitudes.c0
                  + params.n_emitters * coupling * amplitudes.ci)
        emitter = ((params.omega_e ** 2 - wd ** 2 + 1j * wd * params.gamma_e) * amplitudes.ci
                   + coupling * amplitudes.c0)
        assert abs(cavity - force) < 1e-12 * force
        assert abs(emitter) < 1e-12 * force


class TestEffectiveDrive:
    def test_baseline_value(self):
        assert effective_drive(BASELINE) == pytest.approx(0.0075 / 401, rel=1e-12)
        assert effective_drive(BASELINE) == pytest.approx(1.8703e-5, rel=1e-4)

    def test_unit_cooperativity_halves_drive(self):
        params = SystemParams(gamma_c=0.04, gamma_e=0.01, g_col=0.01, omega_drive_amp=0.02)
        assert effective_drive(params) == pytest.approx(0.01, rel=1e-14)

    def test_decoupled_limit(self):
        assert effective_drive(BASELINE.with_updates(g_col=0.0)) == BASELINE.omega_drive_amp

    def test_undefined_without_losses(self):
        params = SystemParams(gamma_c=0.0, gamma_c_rad=0.0, g_col=0.0)
        with pytest.raises(ConfigError):
            effective_drive(params)

    def test_identity_over_random_parameters(self):
        rng = np.random.default_rng(2024)
        for _ in range(50):
            params = random_params(rng)
            cooperativity = 4 * params.g_col ** 2 / (params.gamma_c * params.gamma_e)
            expected = params.omega_drive_amp / (cooperativity + 1)
            assert abs(effective_drive(params) - expected) <= 1e-14 * expected


class TestPopulations:
    def test_weak_resonant_baseline_value(self):
        assert weak_resonant_population(BASELINE) == pytest.approx(3.886e-7, rel=1e-3)

    def test_weak_resonant_quadratic(self):
        doubled = BASELINE.with_updates(omega_drive_amp=2 * BASELINE.omega_drive_amp)
        assert weak_resonant_population(doubled) == pytest.approx(
            4 * weak_resonant_population(BASELINE), rel=1e-14)

    def test_weak_resonant_requires_coupling(self):
        with pytest.raises(ConfigError):
            weak_resonant_population(BASELINE.with_updates(g_col=0.0))

    def test_uncoupled_population(self):
        assert uncoupled_population(BASELINE) == pytest.approx(0.0625, rel=1e-14)
        assert uncoupled_population(SystemParams(omega_drive_amp=0.03)) == pytest.approx(1.0)
        assert uncoupled_population(BASELINE.with_updates(omega_drive_amp=0.0)) == 0.0
        with pytest.raises(ConfigError):
            uncoupled_population(SystemParams(gamma_c=0.0, gamma_c_rad=0.0))

    def test_identities_over_random_parameters(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            params = random_params(rng)
            weak = weak_resonant_population(params)
            assert abs(weak - effective_drive(params) ** 2 / params.gamma_c ** 2) <= 1e-14 * weak * 4
            assert abs(timescale_ratio_population(params) - weak) <= 1e-13 * weak
            n_c, _ = co_populations(params, omega_d=1.0)
            assert abs(n_c - weak) <= 1e-12 * weak


class TestSuppression:
    def test_baseline_cooperativity(self):
        assert abs(suppression_ratio(BASELINE) - 1 / 401 ** 2) < 1e-10
        assert suppression_ratio(BASELINE) == pytest.approx(6.2189e-6, rel=1e-4)
        assert suppression_ratio_literal(BASELINE) == pytest.approx(1 / 401, rel=1e-12)

    def test_unit_cooperativity(self):
        params = SystemParams(gamma_c=0.04, gamma_e=0.01, g_col=0.01)
        assert suppression_ratio(params) == pytest.approx(0.25, rel=1e-12)
        assert suppression_ratio_literal(params) == pytest.approx(0.5, rel=1e-12)

    def test_no_coupling_no_suppression(self):
        assert suppression_ratio(BASELINE.with_updates(g_col=0.0)) == 1.0

    def test_classical_ratio_matches_first_principles(self):
        n_c, _ = co_populations(BASELINE)
        ratio = n_c / uncoupled_co_population(BASELINE)
        assert abs(ratio - suppression_ratio(BASELINE)) < 1e-10

    def test_monotone_in_coupling(self):
        ratios = [suppression_ratio(BASELINE.with_updates(g_col=g))
                  for g in np.linspace(0.005, 0.1, 20)]
        assert np.all(np.diff(ratios) < 0)


class TestClassicalMap:
    def test_uncoupled(self):
        mapped = quantum_to_classical_map(BASELINE.with_updates(g_col=0.0))
        assert mapped.k == 0.0
        assert mapped.omega0_sq == 1.0
        assert mapped.omegai_sq == 1.0

    def test_baseline_coupling(self):
        mapped = quantum_to_classical_map(BASELINE)
        assert mapped.k == pytest.approx(-0.06)
        assert mapped.omega0_sq == pytest.approx(1.06)
        assert mapped.omegai_sq == pytest.approx(1.06)
        assert mapped.drive_cl == pytest.approx(0.0075 * np.sqrt(2))
        assert mapped.drive_cl == pytest.approx(1.0607e-2, rel=1e-4)


class TestOdeOracle:
    MODERATE = SystemParams(gamma_c=0.05, gamma_c_rad=0.05, gamma_e=0.02, g_col=0.03,
                            omega_drive_amp=0.01, n_emitters=2)

    @staticmethod
    def assert_matches(measured, expected):
        assert abs(measured.c0 - expected.c0) <= 1e-6 * abs(expected.c0)
        assert abs(measured.ci - expected.ci) <= 1e-6 * abs(expected.ci)

    def test_zero_drive(self):
        measured = classical_ode_oracle(self.MODERATE.with_updates(omega_drive_amp=0.0))
        assert measured.c0 == 0
        assert measured.ci == 0

    def test_bare_oscillator(self):
        params = SystemParams(g_col=0.0, gamma_c=0.05, gamma_c_rad=0.05, omega_drive_amp=0.01)
        measured = classical_ode_oracle(params, omega_d=0.98, t_end=2000.0)
        response = 1.0 - 0.98 ** 2 + 1j * 0.98 * 0.05
        expected = 0.01 * np.sqrt(2) / abs(response)
        assert abs(abs(measured.c0) - expected) <= 1e-6 * expected

    def test_resonance(self):
        self.assert_matches(classical_ode_oracle(self.MODERATE), co_amplitudes(self.MODERATE))

    @pytest.mark.parametrize("detuning", [-0.04, -0.013, 0.006, 0.021, 0.05])
    def test_off_resonance(self, detuning):
        wd = 1.0 + detuning
        self.assert_matches(classical_ode_oracle(self.MODERATE, omega_d=wd),
                            co_amplitudes(self.MODERATE, wd))

    @pytest.mark.slow
    def test_baseline_parameters_on_resonance(self):
        self.assert_matches(classical_ode_oracle(BASELINE), co_amplitudes(BASELINE))

    def test_short_integration_reports_drift(self):
        with pytest.raises(SolverError, match="not converged"):
            classical_ode_oracle(self.MODERATE, t_end=50.0)

    def test_rejects_lossless_default_time(self):
        params = SystemParams(gamma_e=0.0, omega_drive_amp=0.01)
        with pytest.raises(ConfigError):
            classical_ode_oracle(params)
