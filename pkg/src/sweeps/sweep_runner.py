"""
Parameter Sweep Engine

Runs the steady-state solver over a grid of drive frequencies (spectrum
mode) or resonant drive strengths (drive and diagonals modes) for every
requested emitter count, builds critical-drive tables, and evaluates the
classical coupled-oscillator model over the same axes.

Rows are independent work items. They execute on a bounded thread pool and
are collected in (N, grid index) order, so a parallel run reproduces a
serial one bit for bit. A failing row is recorded with its cause and the
sweep carries on.
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from analysis.saturation import (
    DriveSweepSeries,
    coherent_amplitudes,
    cooperativity,
    critical_drive,
    critical_drive_exact,
    detect_onset,
    infer_emitter_count,
    local_slope,
    plateau_slope,
    poisson_distribution,
)
from classical.oscillators import (
    co_populations,
    effective_drive,
    suppression_ratio,
    suppression_ratio_literal,
    uncoupled_co_population,
)
from config.settings import (
    DEFAULT_N_LIST,
    DEFAULT_THREADS,
    CRITICAL_GRID,
    DRIVE_GRID,
    NMAX_HARD_CAP,
    SPECTRUM_GRID,
    TAIL_TOL,
)
from errors import ConfigError, SimulationError
from quantum.hilbert import HilbertSpace
from quantum.model import SystemParams, bare_cavity_amplitude, liouvillian
from quantum.observables import observable_set
from quantum.steady import auto_truncate, fock_tail, frame_displacement, steady_state
from utils import ProgressTracker

logger = logging.getLogger(__name__)

MODES = ("spectrum", "drive", "diagonals", "critical_table")
SPACINGS = {"lin": "lin", "linear": "lin", "log": "log"}
SCAN_PARAMETERS = ("gamma_e", "g_col")

SPECTRUM_VARIABLE = "omega_d"
DRIVE_VARIABLE = "drive_over_gcol"


@dataclass(frozen=True)
class GridSpec:
    """Sweep axis: `count` points from start to stop, linear or logarithmic."""

    start: float
    stop: float
    count: int
    spacing: str = "log"

    def __post_init__(self):
        if self.spacing not in SPACINGS:
            raise ConfigError(f"grid.spacing must be 'lin' or 'log', got '{self.spacing}'")
        object.__setattr__(self, "spacing", SPACINGS[self.spacing])
        if int(self.count) != self.count or self.count < 2:
            raise ConfigError(f"grid.count must be an integer >= 2, got {self.count}")
        if self.spacing == "log" and (self.start <= 0 or self.stop <= 0):
            raise ConfigError("log-spaced grids need positive grid.start and grid.stop")

    @classmethod
    def from_dict(cls, values: Dict[str, Any]) -> "GridSpec":
        return cls(float(values["start"]), float(values["stop"]), int(values["count"]),
                   values.get("spacing", "log"))

    def values(self) -> np.ndarray:
        if self.spacing == "log":
            return np.geomspace(self.start, self.stop, self.count)
        return np.linspace(self.start, self.stop, self.count)

    def to_dict(self) -> Dict[str, Any]:
        return {"start": self.start, "stop": self.stop, "count": self.count, "spacing": self.spacing}


@dataclass(frozen=True)
class TruncationSpec:
    """Fixed Fock cutoff (n_max set) or automatic selection (n_max None)."""

    n_max: Optional[int] = None
    tail_tol: float = TAIL_TOL
    cap: int = NMAX_HARD_CAP

    def __post_init__(self):
        if self.n_max is not None and (int(self.n_max) != self.n_max or self.n_max < 1):
            raise ConfigError(f"truncation.n_max must be an integer >= 1, got {self.n_max}")
        if not 0 < self.tail_tol < 1:
            raise ConfigError(f"truncation.tail_tol must lie in (0, 1), got {self.tail_tol}")
        if self.cap < 1:
            raise ConfigError(f"truncation.cap must be >= 1, got {self.cap}")

    @property
    def auto(self) -> bool:
        return self.n_max is None

    def to_dict(self) -> Dict[str, Any]:
        return {"n_max": "auto" if self.auto else self.n_max,
                "tail_tol": self.tail_tol, "cap": self.cap}


@dataclass(frozen=True)
class CriticalScan:
    """Scan values for a critical-drive table (gamma_e or g_col)."""

    parameter: str = "gamma_e"
    values: Tuple[float, ...] = ()

    def __post_init__(self):
        if self.parameter not in SCAN_PARAMETERS:
            raise ConfigError(
                f"critical_table.parameter must be one of {SCAN_PARAMETERS}, got '{self.parameter}'"
            )
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if any(v <= 0 for v in self.values):
            raise ConfigError(f"critical_table.values must be positive, got {list(self.values)}")

    def to_dict(self) -> Dict[str, Any]:
        return {"parameter": self.parameter, "values": list(self.values)}


def default_grid(mode: str) -> GridSpec:
    if mode == "spectrum":
        return GridSpec.from_dict(SPECTRUM_GRID)
    if mode == "critical_table":
        return GridSpec.from_dict(CRITICAL_GRID)
    return GridSpec.from_dict(DRIVE_GRID)


@dataclass(frozen=True)
class SweepSpec:
    """
    Everything needed to reproduce one sweep.

    Spectrum grids are drive frequencies in units of omega_c. Drive and
    diagonals grids are drive strengths in units of g_col. The swept field
    of `params` is overwritten per row.
    """

    mode: str = "spectrum"
    params: SystemParams = field(default_factory=SystemParams)
    grid: Optional[GridSpec] = None
    n_list: Tuple[int, ...] = DEFAULT_N_LIST
    truncation: TruncationSpec = field(default_factory=TruncationSpec)
    include_classical: bool = False
    threads: int = DEFAULT_THREADS
    critical: Optional[CriticalScan] = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got '{self.mode}'")
        if self.grid is None:
            object.__setattr__(self, "grid", default_grid(self.mode))

        n_list = tuple(self.n_list)
        if not n_list:
            raise ConfigError("n_list must name at least one emitter count")
        for n in n_list:
            if int(n) != n or n < 1:
                raise ConfigError(f"n_list entries must be integers >= 1, got {n}")
        object.__setattr__(self, "n_list", tuple(int(n) for n in n_list))

        if int(self.threads) != self.threads or self.threads < 1:
            raise ConfigError(f"threads must be an integer >= 1, got {self.threads}")
        if self.mode in ("drive", "diagonals", "critical_table") and self.params.g_col <= 0:
            raise ConfigError("drive grids are in units of g_col, which must be positive")
        if self.mode == "critical_table" and (self.critical is None or not self.critical.values):
            raise ConfigError("critical_table mode needs critical_table.values")

    @property
    def sweep_variable(self) -> str:
        if self.mode == "critical_table":
            return self.critical.parameter
        return SPECTRUM_VARIABLE if self.mode == "spectrum" else DRIVE_VARIABLE

    def with_updates(self, **changes) -> "SweepSpec":
        return replace(self, **changes)

    def point_params(self, n: int, value: float) -> SystemParams:
        """System parameters for one grid point at emitter count n."""
        params = self.params.with_updates(n_emitters=n)
        if self.mode == "spectrum":
            return params.with_updates(omega_d=float(value))
        return params.with_updates(omega_d=params.omega_c,
                                   omega_drive_amp=float(value) * params.g_col)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "mode": self.mode,
            "params": self.params.to_dict(),
            "grid": self.grid.to_dict(),
            "n_list": list(self.n_list),
            "truncation": self.truncation.to_dict(),
            "include_classical": self.include_classical,
            "threads": self.threads,
            "critical_table": self.critical.to_dict() if self.critical else None,
        }


@dataclass
class SweepResult:
    """Rows in (N, grid index) order plus run diagnostics."""

    spec: SweepSpec
    rows: List[Dict[str, Any]]
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    @property
    def failed_rows(self) -> int:
        return sum(1 for row in self.rows if row.get("status") != "ok")

    @property
    def complete(self) -> bool:
        return self.failed_rows == 0

    def to_frame(self) -> pd.DataFrame:
        """Rows as a DataFrame with the sweep variable as the first column."""
        frame = pd.DataFrame(self.rows)
        leading = [c for c in (self.spec.sweep_variable,) if c in frame.columns]
        return frame[leading + [c for c in frame.columns if c not in leading]]

    def drive_series(self, n: int) -> DriveSweepSeries:
        """Successful rows of emitter count n as a DriveSweepSeries."""
        if self.spec.mode not in ("drive", "diagonals"):
            raise ConfigError(f"drive series need a drive or diagonals sweep, not '{self.spec.mode}'")
        rows = [r for r in self.rows if r["n_emitters"] == n and r["status"] == "ok"]
        diagonals = None
        if self.spec.mode == "diagonals":
            diagonals = [np.array([r[f"rho_{k}G"] for k in range(_stored_diagonals(r))])
                         for r in rows]
        return DriveSweepSeries(
            drive=[r["omega_drive_amp"] for r in rows],
            cavity_pop=[r["cavity_pop"] for r in rows],
            ensemble_pop=[r["ensemble_pop"] for r in rows],
            params=self.spec.params.with_updates(n_emitters=n),
            diagonals=diagonals,
        )


def _stored_diagonals(row: Dict[str, Any]) -> int:
    count = 0
    while f"rho_{count}G" in row:
        count += 1
    return count


def _map_ordered(func: Callable, items: Sequence, threads: int,
                 tracker: Optional[ProgressTracker] = None) -> List[Any]:
    """Apply func to items on up to `threads` workers, preserving item order."""
    results = []
    if threads == 1:
        iterator: Iterable = map(func, items)
        executor = None
    else:
        executor = ThreadPoolExecutor(max_workers=threads)
        iterator = executor.map(func, items)
    try:
        for result in iterator:
            results.append(result)
            if tracker:
                tracker.update()
    finally:
        if executor:
            executor.shutdown()
    return results


def _bare_photons(params: SystemParams) -> float:
    return abs(bare_cavity_amplitude(params)) ** 2


def _group_cutoff(spec: SweepSpec, n: int, members: List[Tuple[SystemParams, complex]],
                  displaced: bool) -> int:
    """
    Fock cutoff shared by one frame group of emitter count n.

    The plain group is truncated at its most strongly driven member (the
    resonant point in spectrum mode when that is plain). The displaced group
    takes the larger cutoff found at its weakest and strongest members.
    """
    truncation = spec.truncation
    if not truncation.auto:
        return truncation.n_max

    if not displaced:
        reference = max(members, key=lambda member: _bare_photons(member[0]))[0]
        if spec.mode == "spectrum":
            resonant = spec.params.with_updates(n_emitters=n, omega_d=spec.params.omega_c)
            if frame_displacement(resonant) == 0:
                reference = resonant
        return auto_truncate(reference, tail_tol=truncation.tail_tol, cap=truncation.cap)

    ordered = sorted(members, key=lambda member: _bare_photons(member[0]))
    ends = [ordered[0], ordered[-1]] if len(ordered) > 1 else ordered[:1]
    return max(
        auto_truncate(params, tail_tol=truncation.tail_tol, cap=truncation.cap, displacement=shift)
        for params, shift in ends
    )


def _frame_cutoffs(spec: SweepSpec, n: int, points: List[SystemParams],
                   shifts: List[complex]) -> Tuple[Dict[bool, Optional[int]], Dict[bool, Exception]]:
    """Cutoff per frame group (False: plain, True: displaced) and the errors of failed groups."""
    cutoffs: Dict[bool, Optional[int]] = {}
    errors: Dict[bool, Exception] = {}
    for displaced in (False, True):
        members = [(p, s) for p, s in zip(points, shifts) if (s != 0) == displaced]
        if not members:
            continue
        try:
            cutoffs[displaced] = _group_cutoff(spec, n, members, displaced)
        except SimulationError as e:
            frame = "displaced" if displaced else "plain"
            logger.warning(f"truncation for N={n} ({frame} frame) failed, its rows fail: {e}")
            cutoffs[displaced] = None
            errors[displaced] = e
    return cutoffs, errors


def _diagonal_count(cutoffs: Dict[bool, Optional[int]]) -> Optional[int]:
    """Number of rho_{n,G} columns: plain cutoff + 1, else the displaced one."""
    for displaced in (False, True):
        if cutoffs.get(displaced) is not None:
            return cutoffs[displaced] + 1
    return None


def _classical_companions(params: SystemParams) -> Dict[str, float]:
    try:
        n_c, n_ens = co_populations(params)
        n_c0 = uncoupled_co_population(params)
    except SimulationError as e:
        logger.warning(f"classical companion unavailable at omega_d={params.omega_d}: {e}")
        return {"n_c": np.nan, "n_ens": np.nan, "n_c0": np.nan}
    return {"n_c": n_c, "n_ens": n_ens, "n_c0": n_c0}


def _poisson_overlays(params: SystemParams, n_max: int) -> Dict[str, float]:
    """Exact Poisson weights for the coupled (effective-drive) and uncoupled cavity."""
    if params.gamma_c <= 0 or params.g_col <= 0:
        return {}
    amplitudes = coherent_amplitudes(params)
    coupled = poisson_distribution(amplitudes.alpha_c_sq, n_max)
    uncoupled = poisson_distribution(amplitudes.alpha_c0_sq, n_max)
    overlays = {f"poisson_c_{k}": float(w) for k, w in enumerate(coupled)}
    overlays.update({f"poisson_c0_{k}": float(w) for k, w in enumerate(uncoupled)})
    return overlays


def _base_row(spec: SweepSpec, n: int, value: float, params: SystemParams,
              n_max: Optional[int], shift: complex = 0j) -> Dict[str, Any]:
    row: Dict[str, Any] = {spec.sweep_variable: float(value)}
    row["omega_drive_amp"] = params.omega_drive_amp
    row["n_emitters"] = n
    row["n_max"] = n_max
    row["displacement"] = abs(shift)
    return row


def _failed_row(spec: SweepSpec, n: int, value: float, error: Exception,
                n_max: Optional[int] = None, shift: complex = 0j) -> Dict[str, Any]:
    row = _base_row(spec, n, value, spec.point_params(n, value), n_max, shift)
    row.update(status="failed", error=str(error), cavity_pop=np.nan,
               ensemble_pop=np.nan, scattering=np.nan, residual=np.nan)
    return row


def _solve_row(spec: SweepSpec, n: int, value: float, n_max: int, shift: complex = 0j,
               diagonal_count: Optional[int] = None) -> Dict[str, Any]:
    params = spec.point_params(n, value)
    try:
        rho = steady_state(liouvillian(params, HilbertSpace(n, n_max), shift))
    except SimulationError as e:
        logger.warning(f"row N={n}, {spec.sweep_variable}={value:.6g} failed: {e}")
        return _failed_row(spec, n, value, e, n_max, shift)

    row = _base_row(spec, n, value, params, n_max, shift)
    diagonals = spec.mode == "diagonals"
    count = (diagonal_count or n_max + 1) if diagonals else None
    row.update(observable_set(params, rho, count).to_row(include_diagonals=diagonals))
    row["residual"] = rho.residual
    row["tail"] = fock_tail(rho)
    if spec.truncation.auto and row["tail"] >= spec.truncation.tail_tol:
        logger.warning(
            f"row N={n}, {spec.sweep_variable}={value:.6g} leaves {row['tail']:.2e} in the top "
            f"Fock levels of the shared cutoff n_max={n_max}"
        )
    if diagonals:
        row.update(_poisson_overlays(params, count - 1))
    if spec.include_classical:
        row.update(_classical_companions(params))
    row["status"] = "ok"
    row["error"] = ""
    return row


def _plateau_estimates(result: "SweepResult") -> Tuple[Dict[str, Optional[float]],
                                                         Dict[str, Optional[int]]]:
    """Plateau slope and inferred emitter count per N of a drive sweep."""
    slopes: Dict[str, Optional[float]] = {}
    estimates: Dict[str, Optional[int]] = {}
    for n in result.spec.n_list:
        try:
            series = result.drive_series(n)
            slopes[str(n)] = plateau_slope(series)
            estimates[str(n)] = infer_emitter_count(series)
        except ConfigError as e:
            logger.info(f"no emitter-count estimate for N={n}: {e}")
            slopes[str(n)] = None
            estimates[str(n)] = None
    return slopes, estimates


def run_sweep(spec: SweepSpec) -> SweepResult:
    """
    Solve one steady state per (grid point, N).

    Rows whose bare-cavity coherent state holds many photons are solved in
    the displaced frame (see frame_displacement); each frame group of an
    emitter count shares one Fock cutoff.

    Args:
        spec: Sweep specification; critical_table mode delegates to critical_table()

    Returns:
        SweepResult with rows ordered by (N, grid index); failed rows carry
        status "failed" and the error message
    """
    if spec.mode == "critical_table":
        table = critical_table(spec.params, spec.n_list, spec.critical.parameter,
                               spec.critical.values, grid=spec.grid,
                               truncation=spec.truncation, threads=spec.threads)
        failed = int((table["status"] != "ok").sum())
        return SweepResult(spec=spec, rows=table.to_dict("records"),
                           diagnostics={"failed_rows": failed})

    started = time.time()
    grid = spec.grid.values()
    logger.info(
        f"Starting {spec.mode} sweep: {len(grid)} points x N={list(spec.n_list)} "
        f"on {spec.threads} thread(s)"
    )

    rows: List[Dict[str, Any]] = []
    n_max_used: Dict[str, Optional[int]] = {}
    n_max_displaced: Dict[str, Optional[int]] = {}
    tracker = ProgressTracker(len(grid) * len(spec.n_list), f"{spec.mode} sweep")

    for n in spec.n_list:
        points = [spec.point_params(n, value) for value in grid]
        shifts = [frame_displacement(params) for params in points]
        cutoffs, errors = _frame_cutoffs(spec, n, points, shifts)
        n_max_used[str(n)] = cutoffs.get(False)
        n_max_displaced[str(n)] = cutoffs.get(True)
        diagonal_count = _diagonal_count(cutoffs)

        def solve(item, n=n, cutoffs=cutoffs, errors=errors, diagonal_count=diagonal_count):
            value, shift = item
            displaced = shift != 0
            if cutoffs[displaced] is None:
                return _failed_row(spec, n, value, errors[displaced], shift=shift)
            return _solve_row(spec, n, value, cutoffs[displaced], shift, diagonal_count)

        rows.extend(_map_ordered(solve, list(zip(grid, shifts)), spec.threads, tracker))

    residuals = [r["residual"] for r in rows if r["status"] == "ok"]
    result = SweepResult(
        spec=spec,
        rows=rows,
        diagnostics={
            "n_max": n_max_used,
            "n_max_displaced": n_max_displaced,
            "max_residual": float(np.max(residuals)) if residuals else None,
            "wall_time_s": time.time() - started,
            "failed_rows": 0,
        },
    )
    result.diagnostics["failed_rows"] = result.failed_rows
    if spec.mode in ("drive", "diagonals"):
        slopes, estimates = _plateau_estimates(result)
        result.diagnostics["plateau_slope"] = slopes
        result.diagnostics["emitter_estimate"] = estimates
    tracker.finish()
    logger.info(
        f"{spec.mode} sweep finished: {len(rows)} rows, {result.failed_rows} failed, "
        f"{result.diagnostics['wall_time_s']:.2f}s"
    )
    return result


def _slope_or_nan(series: DriveSweepSeries, omega: float) -> float:
    try:
        return local_slope(series, omega)
    except ConfigError:
        return float("nan")


def critical_table(params: SystemParams, n_list: Sequence[int], parameter: str,
                   values: Sequence[float], grid: Optional[GridSpec] = None,
                   truncation: Optional[TruncationSpec] = None,
                   threads: int = DEFAULT_THREADS) -> pd.DataFrame:
    """
    Predicted versus detected onset of the (N+1)-photon regime.

    For each scan value and emitter count this runs a fresh drive sweep and
    reports the predicted and exact critical drives, the detected onset,
    the cooperativity, the local slopes at half and twice the predicted
    critical drive, and the plateau slope with the emitter count it implies.

    Args:
        params: Base parameters
        n_list: Emitter counts
        parameter: "gamma_e" or "g_col"
        values: Positive scan values
        grid: Drive grid in units of g_col, spanning the onset region by default
        truncation: Fock truncation for each sweep
        threads: Worker bound for each sweep

    Returns:
        DataFrame, one row per (value, N)
    """
    scan = CriticalScan(parameter, tuple(values))
    grid = grid or default_grid("critical_table")
    truncation = truncation or TruncationSpec()

    records = []
    for value in scan.values:
        for n in n_list:
            cell_params = params.with_updates(**{parameter: value}, n_emitters=n)
            record: Dict[str, Any] = {parameter: value, "n_emitters": n}
            try:
                predicted = critical_drive(cell_params, n)
                record.update(
                    cooperativity=cooperativity(cell_params),
                    omega_cr=predicted,
                    omega_cr_exact=critical_drive_exact(cell_params, n),
                )
                sweep = run_sweep(SweepSpec(mode="drive", params=cell_params, grid=grid,
                                            n_list=(n,), truncation=truncation, threads=threads))
                series = sweep.drive_series(n)
                onset = detect_onset(series)
                record.update(
                    onset=np.nan if onset is None else onset,
                    slope_half_cr=_slope_or_nan(series, predicted / 2.0),
                    slope_twice_cr=_slope_or_nan(series, 2.0 * predicted),
                    plateau_slope=sweep.diagnostics["plateau_slope"][str(n)],
                    emitter_estimate=sweep.diagnostics["emitter_estimate"][str(n)],
                    failed_points=sweep.failed_rows,
                    status="ok",
                    error="",
                )
            except SimulationError as e:
                logger.warning(f"critical table cell {parameter}={value}, N={n} failed: {e}")
                record.update(status="failed", error=str(e))
            logger.info(
                f"critical table {parameter}={value:.4g}, N={n}: "
                f"Omega_cr={record.get('omega_cr', float('nan')):.4g}, "
                f"onset={record.get('onset', float('nan')):.4g}"
            )
            records.append(record)

    columns = [parameter, "n_emitters", "cooperativity", "omega_cr", "omega_cr_exact", "onset",
               "slope_half_cr", "slope_twice_cr", "plateau_slope", "emitter_estimate",
               "failed_points", "status", "error"]
    return pd.DataFrame(records, columns=columns)


def classical_sweep(spec: SweepSpec) -> SweepResult:
    """
    Analytic coupled-oscillator response over a spectrum or drive axis.

    Args:
        spec: Sweep specification in spectrum or drive mode

    Returns:
        SweepResult with n_c, n_ens, n_c0, their ratio and the resonant
        suppression diagnostics per row
    """
    if spec.mode not in ("spectrum", "drive"):
        raise ConfigError(f"classical sweeps run over a spectrum or drive axis, not '{spec.mode}'")

    started = time.time()
    rows = []
    for n in spec.n_list:
        for value in spec.grid.values():
            params = spec.point_params(n, value)
            row = _base_row(spec, n, value, params, None)
            del row["n_max"], row["displacement"]
            try:
                row.update(_strict_classical(params))
                row.update(status="ok", error="")
            except SimulationError as e:
                logger.warning(f"classical row N={n}, {spec.sweep_variable}={value:.6g} failed: {e}")
                row.update(status="failed", error=str(e))
            rows.append(row)

    result = SweepResult(spec=spec, rows=rows,
                         diagnostics={"wall_time_s": time.time() - started})
    result.diagnostics["failed_rows"] = result.failed_rows
    logger.info(f"classical sweep finished: {len(rows)} rows, {result.failed_rows} failed")
    return result


def _strict_classical(params: SystemParams) -> Dict[str, float]:
    n_c, n_ens = co_populations(params)
    n_c0 = uncoupled_co_population(params)
    values = {
        "n_c": n_c,
        "n_ens": n_ens,
        "n_c0": n_c0,
        "ratio": n_c / n_c0 if n_c0 > 0 else np.nan,
        "suppression": suppression_ratio(params) if params.gamma_c > 0 else np.nan,
        "suppression_literal": (suppression_ratio_literal(params)
                                if params.gamma_c * params.gamma_e > 0 else np.nan),
    }
    if params.g_col > 0 or params.gamma_c * params.gamma_e > 0:
        values["omega_eff"] = effective_drive(params)
    return values
