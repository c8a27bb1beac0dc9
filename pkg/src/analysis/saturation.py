"""
Unconventional Saturation Analysis

This module predicts where the (N+1)-photon regime sets in, compares
steady-state populations with coherent-state Poisson statistics, extracts
log-log slopes from drive sweeps, detects the nonlinear onset and infers the
number of emitters from the slope plateau.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import poisson

from config.settings import INFERENCE_MIN_SLOPE, ONSET_THRESHOLD, PLATEAU_SUPPRESSION_MAX
from classical.oscillators import effective_drive, uncoupled_population, weak_resonant_population
from errors import ConfigError
from quantum.model import SystemParams

logger = logging.getLogger(__name__)

LINEAR_SLOPE = 2.0


@dataclass
class DriveSweepSeries:
    """Cavity response along a resonant drive sweep at fixed N."""

    drive: np.ndarray
    cavity_pop: np.ndarray
    ensemble_pop: np.ndarray
    params: SystemParams
    diagonals: Optional[List[np.ndarray]] = field(default=None)

    def __post_init__(self):
        self.drive = np.asarray(self.drive, dtype=float)
        self.cavity_pop = np.asarray(self.cavity_pop, dtype=float)
        self.ensemble_pop = np.asarray(self.ensemble_pop, dtype=float)

        if not (len(self.drive) == len(self.cavity_pop) == len(self.ensemble_pop)):
            raise ConfigError("drive, cavity_pop and ensemble_pop must have equal length")
        if np.any(np.diff(self.drive) <= 0):
            raise ConfigError("drive strengths must be strictly increasing")
        if np.any(self.cavity_pop < -1e-10) or np.any(self.ensemble_pop < -1e-10):
            raise ConfigError("populations must be non-negative")

    def __len__(self):
        return len(self.drive)


@dataclass(frozen=True)
class CoherentAmplitudes:
    """Squared coherent-state amplitudes of the effective-drive picture."""

    alpha_c_sq: float
    alpha_c0_sq: float
    alpha_ens_sq: float
    alpha_eff_sq: float


def cooperativity(params: SystemParams) -> float:
    """C = 4 g_col^2 / (gamma_c gamma_e)."""
    denominator = params.gamma_c * params.gamma_e
    if denominator <= 0:
        raise ConfigError("cooperativity requires gamma_c > 0 and gamma_e > 0")
    return 4.0 * params.g_col ** 2 / denominator


def _critical_core(params: SystemParams, n: int) -> float:
    if params.g_col <= 0 or params.gamma_e <= 0:
        raise ConfigError("critical drive requires g_col > 0 and gamma_e > 0")
    if int(n) != n or n < 1:
        raise ConfigError(f"emitter count must be an integer >= 1, got {n}")
    return math.factorial(n) * params.gamma_e ** 2 * params.g_col ** (2 * (n - 1)) / 16.0


def _interference_factor(params: SystemParams) -> float:
    """1 + gamma_c gamma_e / (4 g_col^2)."""
    return 1.0 + params.gamma_c * params.gamma_e / (4.0 * params.g_col ** 2)


def critical_drive(params: SystemParams, n: int) -> float:
    """
    Critical drive strength for the onset of (N+1)-photon processes,

        O_cr(N) = (N! ge^2 g_col^(2(N-1)) / (16 (1 + gc ge / 4 g_col^2)^2))^(1/2N)

    Args:
        params: System parameters (Omega_d is ignored)
        n: Number of emitters

    Returns:
        Omega_cr in units of omega_c
    """
    core = _critical_core(params, n)
    return (core / _interference_factor(params) ** 2) ** (1.0 / (2 * n))


def critical_drive_exact(params: SystemParams, n: int) -> float:
    """
    Drive at which the weak-drive cavity population equals the missing
    (N+1)-th ensemble term, (N+1) P_ens(N+1), solved without simplification.
    """
    core = _critical_core(params, n)
    return _interference_factor(params) * core ** (1.0 / (2 * n))


def poisson_weight(alpha_sq: float, n: int, mode: str = "exact") -> float:
    """
    Probability of n quanta in a coherent state with mean |alpha|^2.

    Args:
        alpha_sq: Mean occupation |alpha|^2 (>= 0)
        n: Quantum number
        mode: "exact" for e^-|a|^2 |a|^2n / n!, "approximate" for |a|^2n / n!

    Returns:
        Probability (approximate mode is only meaningful for |alpha|^2 << 1)
    """
    if alpha_sq < 0:
        raise ConfigError(f"alpha_sq must be non-negative, got {alpha_sq}")
    if mode == "exact":
        return float(poisson.pmf(n, alpha_sq))
    if mode == "approximate":
        return alpha_sq ** n / math.factorial(n)
    raise ConfigError(f"unknown Poisson mode '{mode}' (use 'exact' or 'approximate')")


def poisson_distribution(alpha_sq: float, n_max: int) -> np.ndarray:
    """Exact Poisson weights for n = 0 ... n_max."""
    return poisson.pmf(np.arange(n_max + 1), alpha_sq)


def coherent_amplitudes(params: SystemParams) -> CoherentAmplitudes:
    """
    Coupled, uncoupled, ensemble and effective squared amplitudes on resonance.

    |a_c|^2 = O_eff^2 / gc^2,  |a_c0|^2 = Od^2 / gc^2,
    a_ens = Od / (1 + gc ge / 4 g_col^2) * T,  a_eff = (Od - O_ens) * T,  T = 1/g_col
    """
    if params.gamma_c <= 0 or params.g_col <= 0:
        raise ConfigError("coherent amplitudes require gamma_c > 0 and g_col > 0")

    interaction_time = 1.0 / params.g_col
    omega_eff = effective_drive(params)
    omega_ens = params.omega_drive_amp / _interference_factor(params)
    return CoherentAmplitudes(
        alpha_c_sq=omega_eff ** 2 / params.gamma_c ** 2,
        alpha_c0_sq=params.omega_drive_amp ** 2 / params.gamma_c ** 2,
        alpha_ens_sq=(omega_ens * interaction_time) ** 2,
        alpha_eff_sq=((params.omega_drive_amp - omega_ens) * interaction_time) ** 2,
    )


def critical_condition_residual(params: SystemParams, n: int, omega_d: float) -> float:
    """Relative mismatch between <n_c>_weak and (N+1) P_ens(N+1) at drive omega_d."""
    driven = params.with_updates(omega_drive_amp=omega_d)
    cavity = weak_resonant_population(driven)
    ensemble_term = (n + 1) * poisson_weight(
        coherent_amplitudes(driven).alpha_ens_sq, n + 1, mode="approximate"
    )
    return abs(cavity - ensemble_term) / abs(ensemble_term)


def _log_arrays(series: DriveSweepSeries) -> Tuple[np.ndarray, np.ndarray]:
    if len(series) < 3:
        raise ConfigError(f"slope extraction needs at least 3 points, got {len(series)}")
    if np.any(series.drive <= 0):
        raise ConfigError("slope extraction needs positive drive strengths")
    if np.any(series.cavity_pop <= 0):
        raise ConfigError("slope extraction needs positive cavity populations")
    return np.log(series.drive), np.log(series.cavity_pop)


def _slope_arrays(series: DriveSweepSeries) -> Tuple[np.ndarray, np.ndarray]:
    log_drive, log_pop = _log_arrays(series)
    slopes = (log_pop[2:] - log_pop[:-2]) / (log_drive[2:] - log_drive[:-2])
    return series.drive[1:-1], slopes


def loglog_slopes(series: DriveSweepSeries) -> List[Tuple[float, float]]:
    """Central-difference slopes d log<a^dag a> / d log Omega_d at interior points."""
    drive, slopes = _slope_arrays(series)
    return [(float(o), float(s)) for o, s in zip(drive, slopes)]


def local_slope(series: DriveSweepSeries, omega: float) -> float:
    """Log-log slope at an arbitrary drive inside the interior range (log-linear interpolation)."""
    drive, slopes = _slope_arrays(series)
    if not drive[0] <= omega <= drive[-1]:
        raise ConfigError(
            f"drive {omega:.4g} outside the interior sweep range [{drive[0]:.4g}, {drive[-1]:.4g}]"
        )
    return float(np.interp(np.log(omega), np.log(drive), slopes))


def detect_onset(series: DriveSweepSeries, threshold: float = ONSET_THRESHOLD) -> Optional[float]:
    """
    First drive strength where the local slope reaches 2 + threshold.

    Args:
        series: Drive sweep
        threshold: Slope excess over linear response

    Returns:
        Onset Omega_d (interpolated in log Omega_d), or None if the sweep
        never leaves the linear regime
    """
    drive, slopes = _slope_arrays(series)
    target = LINEAR_SLOPE + threshold

    crossings = np.nonzero(slopes >= target)[0]
    if len(crossings) == 0:
        return None

    i = int(crossings[0])
    if i == 0:
        return float(drive[0])

    fraction = (target - slopes[i - 1]) / (slopes[i] - slopes[i - 1])
    log_onset = np.log(drive[i - 1]) + fraction * (np.log(drive[i]) - np.log(drive[i - 1]))
    return float(np.exp(log_onset))


def plateau_window(series: DriveSweepSeries,
                   max_suppression: float = PLATEAU_SUPPRESSION_MAX) -> np.ndarray:
    """
    Mask over the interior slope points whose whole stencil keeps the cavity
    population below max_suppression times the bare-cavity population.

    Past that fraction the blockade is breaking down and the slope overshoots
    the (N+1)-photon plateau on its way back to the linear bare response.
    """
    unit_drive = series.params.with_updates(omega_drive_amp=1.0)
    bare = series.drive ** 2 * uncoupled_population(unit_drive)
    blocked = series.cavity_pop <= max_suppression * bare
    return blocked[:-2] & blocked[1:-1] & blocked[2:]


def plateau_slope(series: DriveSweepSeries,
                  max_suppression: float = PLATEAU_SUPPRESSION_MAX) -> Optional[float]:
    """Largest log-log slope inside the plateau window, None if the window is empty."""
    _, slopes = _slope_arrays(series)
    window = plateau_window(series, max_suppression)
    if not np.any(window):
        return None
    return float(np.max(slopes[window]))


def infer_emitter_count(series: DriveSweepSeries,
                        max_suppression: float = PLATEAU_SUPPRESSION_MAX) -> Optional[int]:
    """
    Emitter count from the slope plateau: round(plateau slope / 2 - 1), at least 1.

    Returns:
        The estimate, or None when the plateau window is empty or its slope
        stays at or below the inference threshold
    """
    plateau = plateau_slope(series, max_suppression)
    if plateau is None:
        logger.info("no drive point below the saturation window; emitter count undetermined")
        return None
    if plateau <= INFERENCE_MIN_SLOPE:
        logger.info(f"plateau slope {plateau:.2f} too low to infer the emitter count")
        return None
    return max(1, int(round(plateau / 2.0 - 1.0)))


def cooperativity_scan(params: SystemParams, targets: Iterable[float]) -> List[SystemParams]:
    """Parameter sets reaching each target cooperativity by adjusting g_col."""
    if params.gamma_c <= 0 or params.gamma_e <= 0:
        raise ConfigError("cooperativity scan requires gamma_c > 0 and gamma_e > 0")

    scanned = []
    for target in targets:
        if target < 0:
            raise ConfigError(f"target cooperativity must be non-negative, got {target}")
        g_col = 0.5 * math.sqrt(target * params.gamma_c * params.gamma_e)
        scanned.append(params.with_updates(g_col=g_col))
    return scanned


def loss_panels(gamma_c_values: Sequence[float] = (0.03, 0.17),
                emitter_fractions: Sequence[float] = (0.01, 0.1),
                base: Optional[SystemParams] = None) -> List[SystemParams]:
    """Low-cooperativity panel grid: cavity loss x emitter loss (gamma_e = fraction * gamma_c)."""
    base = base or SystemParams()
    return [
        base.with_updates(gamma_c=gc, gamma_c_rad=gc, gamma_e=fraction * gc)
        for gc in gamma_c_values
        for fraction in emitter_fractions
    ]
