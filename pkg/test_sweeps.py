"""
Tests for the sweep engine, critical tables and classical sweeps
"""

import sys
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

# Add src to path
sys.path.insert(0, str(Path(__file__).parent / "src"))

import sweeps.sweep_runner as sweep_runner
from analysis.saturation import critical_drive
from classical.oscillators import co_populations
from errors import ConfigError, SolverError
from quantum.model import SystemParams
from sweeps.sweep_runner import (
    CriticalScan,
    GridSpec,
    SweepSpec,
    TruncationSpec,
    classical_sweep,
    critical_table,
    run_sweep,
)

BASELINE = SystemParams()


def diagonal_columns(row):
    return sum(1 for column in row if column.startswith("rho_"))


def small_drive_spec(**changes):
    spec = SweepSpec(mode="drive", params=BASELINE, grid=GridSpec(1e-3, 0.25, 5, "log"),
                     n_list=(1, 2), truncation=TruncationSpec(n_max=4))
    return spec.with_updates(**changes)


class TestSpecs:
    def test_grid_values(self):
        np.testing.assert_allclose(GridSpec(1e-3, 10.0, 5, "log").values(),
                                   [1e-3, 1e-2, 1e-1, 1.0, 10.0], rtol=1e-12)
        np.testing.assert_allclose(GridSpec(0.9, 1.1, 3, "linear").values(), [0.9, 1.0, 1.1])

    @pytest.mark.parametrize("grid", [
        dict(start=1.0, stop=2.0, count=1),
        dict(start=0.0, stop=2.0, count=3, spacing="log"),
        dict(start=1.0, stop=2.0, count=3, spacing="cubic"),
    ])
    def test_grid_validation(self, grid):
        with pytest.raises(ConfigError):
            GridSpec(**grid)

    def test_default_grids(self):
        assert SweepSpec(mode="drive").grid.count == 60
        assert SweepSpec(mode="spectrum").grid.spacing == "lin"

    def test_spec_validation(self):
        with pytest.raises(ConfigError):
            SweepSpec(mode="waterfall")
        with pytest.raises(ConfigError):
            SweepSpec(mode="drive", params=BASELINE.with_updates(g_col=0.0))
        with pytest.raises(ConfigError):
            SweepSpec(n_list=(0,))
        with pytest.raises(ConfigError):
            SweepSpec(mode="critical_table")

    def test_truncation_spec(self):
        assert TruncationSpec().auto
        assert TruncationSpec().to_dict()["n_max"] == "auto"
        with pytest.raises(ConfigError):
            TruncationSpec(n_max=0)

    def test_point_params(self):
        drive = SweepSpec(mode="drive", params=BASELINE.with_updates(omega_d=1.02))
        point = drive.point_params(2, 0.5)
        assert point.n_emitters == 2
        assert point.omega_drive_amp == pytest.approx(0.015)
        assert point.omega_d == point.omega_c

        spectrum = SweepSpec(mode="spectrum", params=BASELINE)
        point = spectrum.point_params(1, 0.97)
        assert point.omega_d == 0.97
        assert point.omega_drive_amp == BASELINE.omega_drive_amp


class TestRunSweep:
    def test_undriven_rows_are_vacuum(self):
        spec = SweepSpec(mode="spectrum", params=BASELINE.with_updates(omega_drive_amp=0.0),
                         grid=GridSpec(0.99, 1.01, 2, "lin"), truncation=TruncationSpec(n_max=3))
        result = run_sweep(spec)
        assert len(result.rows) == 2
        for row in result.rows:
            assert row["status"] == "ok"
            assert abs(row["cavity_pop"]) < 1e-12
            assert abs(row["ensemble_pop"]) < 1e-12

    def test_row_count_and_order(self):
        result = run_sweep(small_drive_spec())
        frame = result.to_frame()
        assert len(frame) == 5 * 2
        assert frame.columns[0] == "drive_over_gcol"
        assert list(frame["n_emitters"]) == [1] * 5 + [2] * 5
        assert result.complete
        assert result.diagnostics["n_max"] == {"1": 4, "2": 4}
        assert result.diagnostics["n_max_displaced"] == {"1": None, "2": None}
        assert result.diagnostics["max_residual"] <= 1e-10

    def test_deterministic_and_thread_independent(self):
        serial = run_sweep(small_drive_spec(threads=1)).to_frame()
        again = run_sweep(small_drive_spec(threads=1)).to_frame()
        parallel = run_sweep(small_drive_spec(threads=4)).to_frame()
        pd.testing.assert_frame_equal(serial, again)
        pd.testing.assert_frame_equal(serial, parallel)

    def test_failed_row_is_isolated(self, monkeypatch):
        original = sweep_runner.steady_state

        def flaky(L, *args, **kwargs):
            if L.params.n_emitters == 2 and L.params.omega_drive_amp > 0.005:
                raise SolverError("singular constrained system")
            return original(L, *args, **kwargs)

        monkeypatch.setattr(sweep_runner, "steady_state", flaky)
        result = run_sweep(small_drive_spec(threads=2))

        failed = [r for r in result.rows if r["status"] == "failed"]
        assert len(result.rows) == 10
        assert len(failed) == result.failed_rows == result.diagnostics["failed_rows"]
        assert 0 < len(failed) < 5
        assert all("singular" in r["error"] and np.isnan(r["cavity_pop"]) for r in failed)
        assert not result.complete

    def test_truncation_failure_fails_its_frame_group_only(self):
        spec = small_drive_spec(truncation=TruncationSpec(cap=4),
                                grid=GridSpec(1e-5, 10.0, 3, "log"), n_list=(1,))
        result = run_sweep(spec)
        assert [r["status"] for r in result.rows] == ["ok", "ok", "failed"]
        assert "n_max=4" in result.rows[2]["error"]
        assert result.rows[2]["displacement"] == pytest.approx(10.0)
        assert result.diagnostics["n_max"] == {"1": 4}
        assert result.diagnostics["n_max_displaced"] == {"1": None}

    def test_strong_rows_use_displaced_frame(self):
        spec = small_drive_spec(grid=GridSpec(0.5, 5.0, 2, "log"), n_list=(1,),
                                truncation=TruncationSpec())
        result = run_sweep(spec)
        weak, strong = result.rows
        assert result.complete
        assert weak["displacement"] == 0
        assert strong["displacement"] == pytest.approx(5.0)
        assert weak["n_max"] == result.diagnostics["n_max"]["1"]
        assert strong["n_max"] == result.diagnostics["n_max_displaced"]["1"] <= 24
        assert strong["tail"] < 1e-8
        assert strong["cavity_pop"] == pytest.approx(25.0, rel=0.1)
        assert strong["ensemble_pop"] == pytest.approx(0.5, rel=0.05)

    def test_diagonals_share_columns_across_frames(self):
        spec = small_drive_spec(mode="diagonals", grid=GridSpec(0.5, 5.0, 2, "log"),
                                n_list=(1,), truncation=TruncationSpec())
        result = run_sweep(spec)
        weak, strong = result.rows
        count = result.diagnostics["n_max"]["1"] + 1
        assert diagonal_columns(weak) == diagonal_columns(strong) == count
        assert 0 < sum(strong[f"rho_{k}G"] for k in range(count)) <= 1 + 1e-9

    def test_plateau_metadata(self):
        result = run_sweep(small_drive_spec())
        assert set(result.diagnostics["plateau_slope"]) == {"1", "2"}
        assert set(result.diagnostics["emitter_estimate"]) == {"1", "2"}

    def test_spectrum_has_no_plateau_metadata(self):
        spec = SweepSpec(mode="spectrum", params=BASELINE, grid=GridSpec(0.99, 1.01, 2, "lin"),
                         truncation=TruncationSpec(n_max=2))
        assert "emitter_estimate" not in run_sweep(spec).diagnostics

    def test_classical_companions(self):
        result = run_sweep(small_drive_spec(include_classical=True))
        row = result.rows[2]
        n_c, n_ens = co_populations(BASELINE.with_updates(
            n_emitters=row["n_emitters"], omega_drive_amp=row["omega_drive_amp"]))
        assert row["n_c"] == pytest.approx(n_c, rel=1e-12)
        assert row["n_ens"] == pytest.approx(n_ens, rel=1e-12)
        assert row["n_c0"] == pytest.approx(row["omega_drive_amp"] ** 2 / 0.03 ** 2, rel=1e-12)

    def test_diagonals_columns_and_overlays(self):
        result = run_sweep(small_drive_spec(mode="diagonals", n_list=(1,)))
        row = result.rows[0]
        assert [f"rho_{k}G" for k in range(5)] == [c for c in row if c.startswith("rho_")]
        assert "poisson_c_1" in row and "poisson_c0_4" in row
        series = result.drive_series(1)
        assert len(series.diagonals) == 5
        assert series.diagonals[0][0] == pytest.approx(row["rho_0G"])

    def test_drive_series_requires_drive_mode(self):
        spec = SweepSpec(mode="spectrum", params=BASELINE, grid=GridSpec(0.99, 1.01, 2, "lin"),
                         truncation=TruncationSpec(n_max=2))
        with pytest.raises(ConfigError):
            run_sweep(spec).drive_series(1)

    @pytest.mark.parametrize("n_emitters", [1, 2, 3])
    def test_weak_drive_follows_classical(self, n_emitters):
        spec = small_drive_spec(grid=GridSpec(5e-4, 1e-3, 2, "log"), n_list=(n_emitters,),
                                include_classical=True, truncation=TruncationSpec())
        for row in run_sweep(spec).rows:
            assert abs(row["cavity_pop"] - row["n_c"]) / row["n_c"] < 0.02


class TestCriticalTable:
    def test_single_cell_echoes_prediction(self):
        grid = GridSpec(1e-3, 0.3, 16, "log")
        table = critical_table(BASELINE, (1,), "g_col", (0.06,), grid=grid,
                               truncation=TruncationSpec(n_max=6))
        assert list(table.columns[:2]) == ["g_col", "n_emitters"]
        assert len(table) == 1
        row = table.iloc[0]
        assert row["status"] == "ok"
        assert row["cooperativity"] == pytest.approx(1600.0)
        assert row["omega_cr"] == critical_drive(BASELINE.with_updates(g_col=0.06), 1)
        assert row["omega_cr_exact"] > row["omega_cr"]
        assert "emitter_estimate" in table.columns
        assert row["failed_points"] == 0

    def test_cell_failure_recorded(self):
        grid = GridSpec(1e-3, 5.0, 4, "log")
        table = critical_table(BASELINE, (1,), "gamma_e", (0.0003,), grid=grid,
                               truncation=TruncationSpec(cap=2))
        assert table.iloc[0]["status"] == "failed"
        assert table.iloc[0]["error"]

    def test_partial_failure_counted(self, monkeypatch):
        original = sweep_runner.steady_state

        def flaky(L, *args, **kwargs):
            if L.params.omega_drive_amp > 0.1 * BASELINE.g_col:
                raise SolverError("singular constrained system")
            return original(L, *args, **kwargs)

        monkeypatch.setattr(sweep_runner, "steady_state", flaky)
        table = critical_table(BASELINE, (1,), "gamma_e", (0.0003,),
                               grid=GridSpec(1e-3, 0.3, 12, "log"),
                               truncation=TruncationSpec(n_max=5))
        row = table.iloc[0]
        assert row["status"] == "ok"
        assert 0 < row["failed_points"] < 12

    def test_rejects_unknown_parameter(self):
        with pytest.raises(ConfigError):
            critical_table(BASELINE, (1,), "gamma_c", (0.01,))

    def test_run_sweep_delegates(self):
        spec = SweepSpec(mode="critical_table", params=BASELINE, n_list=(1,),
                         grid=GridSpec(1e-3, 0.3, 12, "log"), truncation=TruncationSpec(n_max=5),
                         critical=CriticalScan("gamma_e", (0.0003, 0.0015)))
        result = run_sweep(spec)
        frame = result.to_frame()
        assert frame.columns[0] == "gamma_e"
        assert list(frame["gamma_e"]) == [0.0003, 0.0015]


class TestClassicalSweep:
    def test_spectrum_axis(self):
        spec = SweepSpec(mode="spectrum", params=BASELINE, grid=GridSpec(0.95, 1.05, 11, "lin"))
        frame = classical_sweep(spec).to_frame()
        assert len(frame) == 11
        resonance = frame.iloc[5]
        assert resonance["omega_d"] == pytest.approx(1.0)
        assert resonance["ratio"] == pytest.approx(1 / 401 ** 2, rel=1e-8)
        assert resonance["suppression"] == pytest.approx(1 / 401 ** 2, rel=1e-12)
        assert resonance["suppression_literal"] == pytest.approx(1 / 401, rel=1e-12)
        # resonant dip
        assert resonance["n_c"] == frame["n_c"].min()

    def test_drive_axis_is_quadratic(self):
        spec = SweepSpec(mode="drive", params=BASELINE, grid=GridSpec(1e-3, 10.0, 5, "log"))
        frame = classical_sweep(spec).to_frame()
        np.testing.assert_allclose(frame["n_c"] / frame["drive_over_gcol"] ** 2,
                                   frame["n_c"].iloc[0] / 1e-6, rtol=1e-10)

    def test_suppression_falls_with_coupling(self):
        grid = GridSpec(0.99, 1.01, 3, "lin")
        ratios = []
        for g_col in (0.01, 0.03, 0.06):
            spec = SweepSpec(mode="spectrum", params=BASELINE.with_updates(g_col=g_col), grid=grid)
            ratios.append(classical_sweep(spec).to_frame().iloc[1]["ratio"])
        assert ratios[0] > ratios[1] > ratios[2]

    def test_rejects_diagonals_mode(self):
        with pytest.raises(ConfigError):
            classical_sweep(SweepSpec(mode="diagonals"))


@pytest.mark.slow
class TestBaselineSweeps:
    def test_resonant_quantum_population_exceeds_classical(self):
        spec = SweepSpec(mode="spectrum", params=BASELINE, grid=GridSpec(0.98, 1.02, 5, "lin"),
                         include_classical=True)
        resonance = run_sweep(spec).rows[2]
        assert resonance["omega_d"] == pytest.approx(1.0)
        assert resonance["cavity_pop"] >= 10 * resonance["n_c"]

    @pytest.mark.parametrize("n_emitters", [1, 2])
    def test_strong_drive_asymptote(self, n_emitters):
        spec = SweepSpec(mode="drive", params=BASELINE, grid=GridSpec(5.0, 10.0, 2, "log"),
                         n_list=(n_emitters,), truncation=TruncationSpec())
        row = run_sweep(spec).rows[-1]
        omega = row["omega_drive_amp"]
        assert row["ensemble_pop"] == pytest.approx(n_emitters / 2, rel=0.05)
        assert row["cavity_pop"] == pytest.approx(omega ** 2 / 0.03 ** 2, rel=0.05)

    @pytest.mark.parametrize("n_emitters", [1, 2])
    def test_slopes_bracket_critical_drive(self, n_emitters):
        table = critical_table(BASELINE, (n_emitters,), "gamma_e", (0.00015, 0.0003, 0.0015),
                               threads=4)
        assert (table["status"] == "ok").all()
        assert (table["slope_half_cr"] < 2.3).all()
        assert (table["slope_twice_cr"] > 2.3).all()
        assert (table["omega_cr_exact"] / table["omega_cr"] < 1.01).all()
        if n_emitters > 1:
            assert (table["slope_twice_cr"] > 2.7).all()

    def test_default_drive_sweep_reaches_classical_limits(self):
        spec = SweepSpec(mode="drive", params=BASELINE, n_list=(1,), include_classical=True)
        result = run_sweep(spec)
        assert result.complete
        weak, strong = result.rows[0], result.rows[-1]
        assert weak["drive_over_gcol"] == pytest.approx(1e-3)
        assert strong["drive_over_gcol"] == pytest.approx(10.0)
        assert weak["cavity_pop"] == pytest.approx(weak["n_c"], rel=0.02)
        assert strong["cavity_pop"] == pytest.approx(strong["n_c0"], rel=0.05)
        assert strong["ensemble_pop"] == pytest.approx(0.5, rel=0.05)
        assert result.diagnostics["emitter_estimate"]["1"] == 1

    @pytest.mark.parametrize("n_emitters", [1, 2])
    def test_neighbouring_diagonals_comparable_past_onset(self, n_emitters):
        omega_cr = critical_drive(BASELINE, n_emitters)
        drive = 10 * omega_cr / BASELINE.g_col
        spec = SweepSpec(mode="diagonals", params=BASELINE, grid=GridSpec(drive / 2, drive, 2, "log"),
                         n_list=(n_emitters,))
        row = run_sweep(spec).rows[-1]
        ratio = row[f"rho_{n_emitters + 1}G"] / row[f"rho_{n_emitters}G"]
        assert 0.1 <= ratio <= 10

