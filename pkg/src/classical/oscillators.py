"""
Coupled-Oscillator Analytics

Classical analogue of the driven Tavis-Cummings system: one cavity
oscillator coupled to N identical emitter oscillators,

    x0'' + gc x0' + wc^2 x0 + sum_i 2g sqrt(wc we) x_i = Od sqrt(2 wc) cos(wd t)
    xi'' + ge xi' + we^2 xi + 2g sqrt(wc we) x0 = 0

with unit masses and hbar = 1. Besides the closed-form amplitudes this module
carries the effective-drive quantities derived from them and an RK4
integration of the equations of motion used as an oracle.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from config.settings import CLASSICAL_CONVERGENCE_TOL, CLASSICAL_STEPS_PER_PERIOD
from errors import ConfigError, SolverError
from quantum.model import SystemParams

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ClassicalAmplitudes:
    """Complex steady oscillation amplitudes, x_k(t) = Re(C_k exp(i wd t))."""

    c0: complex
    ci: complex


@dataclass(frozen=True)
class ClassicalMap:
    """Mass-spring parameters equivalent to the quantum model (m_c = m_e = 1)."""

    k: float
    omega0_sq: float
    omegai_sq: float
    drive_cl: float


def _drive_force(params: SystemParams) -> float:
    return params.omega_drive_amp * math.sqrt(2.0 * params.omega_c)


def _coupling_constant(params: SystemParams) -> float:
    return 2.0 * params.g * math.sqrt(params.omega_c * params.omega_e)


def co_amplitudes(params: SystemParams, omega_d: Optional[float] = None) -> ClassicalAmplitudes:
    """
    Closed-form steady amplitudes of the cavity and of each emitter.

    Args:
        params: System parameters
        omega_d: Drive frequency (defaults to params.omega_d)

    Returns:
        ClassicalAmplitudes with C_0 and C_i

    Raises:
        SolverError: If the response denominator vanishes (lossless pole)
    """
    wd = params.omega_d if omega_d is None else omega_d
    cavity_response = params.omega_c ** 2 - wd ** 2 + 1j * wd * params.gamma_c
    emitter_response = params.omega_e ** 2 - wd ** 2 + 1j * wd * params.gamma_e
    exchange = 4.0 * params.g_col ** 2 * params.omega_c * params.omega_e

    denominator = cavity_response * emitter_response - exchange
    scale = abs(cavity_response * emitter_response) + exchange
    if denominator == 0 or abs(denominator) <= 1e-15 * scale:
        raise SolverError(
            f"coupled-oscillator denominator vanishes at omega_d={wd} (undamped resonance)"
        )

    force = _drive_force(params)
    c0 = force * emitter_response / denominator
    ci = -_coupling_constant(params) * force / denominator
    return ClassicalAmplitudes(c0=complex(c0), ci=complex(ci))


def co_populations(params: SystemParams, omega_d: Optional[float] = None) -> Tuple[float, float]:
    """Classical cavity and total ensemble populations <n_c>, <n_ens>."""
    amplitudes = co_amplitudes(params, omega_d)
    n_c = params.omega_c * abs(amplitudes.c0) ** 2 / 2.0
    n_ens = params.n_emitters * params.omega_e * abs(amplitudes.ci) ** 2 / 2.0
    return n_c, n_ens


def uncoupled_co_population(params: SystemParams, omega_d: Optional[float] = None) -> float:
    """Classical population of the bare driven cavity (g_col = 0) at any drive frequency."""
    wd = params.omega_d if omega_d is None else omega_d
    cavity_response = params.omega_c ** 2 - wd ** 2 + 1j * wd * params.gamma_c
    if cavity_response == 0:
        raise SolverError(f"bare cavity response vanishes at omega_d={wd} (gamma_c = 0)")
    return params.omega_c * abs(_drive_force(params) / cavity_response) ** 2 / 2.0


def _loss_ratio(params: SystemParams) -> float:
    """gamma_c gamma_e / (4 g_col^2), i.e. 1/C."""
    return params.gamma_c * params.gamma_e / (4.0 * params.g_col ** 2)


def effective_drive(params: SystemParams) -> float:
    """
    Residual drive on the cavity after destructive interference with the
    ensemble on resonance: (1 - 1/(1 + gc ge / 4 g_col^2)) * Od = Od / (C + 1).
    """
    if params.g_col == 0:
        if params.gamma_c * params.gamma_e == 0:
            raise ConfigError("effective drive undefined for g_col = 0 and gamma_c * gamma_e = 0")
        return params.omega_drive_amp

    x = _loss_ratio(params)
    # 1 - 1/(1+x) written without the cancellation
    return params.omega_drive_amp * x / (1.0 + x)


def weak_resonant_population(params: SystemParams) -> float:
    """Resonant weak-drive cavity population Od^2 ge^2 / (16 g^4) / (1 + gc ge / 4g^2)^2."""
    if params.g_col == 0:
        raise ConfigError("weak_resonant_population diverges for g_col = 0; use uncoupled_population")

    x = _loss_ratio(params)
    return (params.omega_drive_amp ** 2 * params.gamma_e ** 2
            / (16.0 * params.g_col ** 4) / (1.0 + x) ** 2)


def uncoupled_population(params: SystemParams) -> float:
    """Population of the bare driven cavity on resonance, Od^2 / gc^2."""
    if params.gamma_c <= 0:
        raise ConfigError("uncoupled_population requires gamma_c > 0")
    return params.omega_drive_amp ** 2 / params.gamma_c ** 2


def suppression_ratio(params: SystemParams) -> float:
    """
    Coupled over uncoupled resonant population, evaluated from the two
    population formulas. Algebraically 1/(C+1)^2.
    """
    if params.g_col == 0:
        return 1.0
    unit_drive = params.with_updates(omega_drive_amp=1.0)
    return weak_resonant_population(unit_drive) / uncoupled_population(unit_drive)


def suppression_ratio_literal(params: SystemParams) -> float:
    """The textbook figure-of-merit form 1/(C+1), kept as a diagnostic."""
    if params.g_col == 0:
        return 1.0
    return 1.0 / (1.0 / _loss_ratio(params) + 1.0)


def timescale_ratio_population(params: SystemParams) -> float:
    """(T_c/T)^2 |alpha_eff|^2 with T_c = 1/gc, T = 1/g_col and alpha_eff = O_eff T."""
    if params.g_col <= 0 or params.gamma_c <= 0:
        raise ConfigError("timescale ratio requires g_col > 0 and gamma_c > 0")
    cavity_time = 1.0 / params.gamma_c
    interaction_time = 1.0 / params.g_col
    alpha_eff = effective_drive(params) * interaction_time
    return (cavity_time / interaction_time) ** 2 * alpha_eff ** 2


def quantum_to_classical_map(params: SystemParams) -> ClassicalMap:
    """Spring coupling, shifted frequencies and drive of the equivalent oscillators."""
    k = -_coupling_constant(params)
    return ClassicalMap(
        k=k,
        omega0_sq=params.omega_c ** 2 - k,
        omegai_sq=params.omega_e ** 2 - k,
        drive_cl=_drive_force(params),
    )


def _equations_of_motion(params: SystemParams) -> Tuple[np.ndarray, np.ndarray]:
    """Linear system y' = A y + b cos(wd t) for y = (x_0..x_N, v_0..v_N)."""
    size = params.n_emitters + 1
    coupling = _coupling_constant(params)

    stiffness = np.zeros((size, size))
    stiffness[0, 0] = params.omega_c ** 2
    stiffness[1:, 1:] = np.eye(params.n_emitters) * params.omega_e ** 2
    stiffness[0, 1:] = coupling
    stiffness[1:, 0] = coupling

    damping = np.diag([params.gamma_c] + [params.gamma_e] * params.n_emitters)

    A = np.zeros((2 * size, 2 * size))
    A[:size, size:] = np.eye(size)
    A[size:, :size] = -stiffness
    A[size:, size:] = -damping

    b = np.zeros(2 * size)
    b[size] = _drive_force(params)
    return A, b


def _rk4_step(A, b, y, t, h, wd):
    k1 = A @ y + b * math.cos(wd * t)
    k2 = A @ (y + 0.5 * h * k1) + b * math.cos(wd * (t + 0.5 * h))
    k3 = A @ (y + 0.5 * h * k2) + b * math.cos(wd * (t + 0.5 * h))
    k4 = A @ (y + h * k3) + b * math.cos(wd * (t + h))
    return y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def _project_period(A, b, y, h, wd, steps):
    """Step through one drive period; return final state and extracted amplitudes."""
    size = len(y) // 2
    phases = wd * h * np.arange(steps)
    samples = np.empty((steps, size))
    for j in range(steps):
        samples[j] = y[:size]
        y = _rk4_step(A, b, y, j * h, h, wd)

    # x = Re(C e^{i wd t}) = Re C cos - Im C sin
    real = 2.0 / steps * (np.cos(phases) @ samples)
    imag = -2.0 / steps * (np.sin(phases) @ samples)
    return y, real + 1j * imag


def classical_ode_oracle(params: SystemParams, omega_d: Optional[float] = None,
                         t_end: Optional[float] = None,
                         steps_per_period: int = CLASSICAL_STEPS_PER_PERIOD) -> ClassicalAmplitudes:
    """
    Integrate the classical equations of motion from rest with RK4 and
    extract the steady amplitudes by projecting the last drive period onto
    cos(wd t) and sin(wd t).

    Args:
        params: System parameters
        omega_d: Drive frequency (defaults to params.omega_d)
        t_end: Integration time; defaults to 60 / min(gamma_c, gamma_e)
        steps_per_period: RK4 steps per drive period

    Returns:
        ClassicalAmplitudes measured from the trajectory

    Raises:
        SolverError: If the amplitudes still drift between the last two periods
    """
    wd = params.omega_d if omega_d is None else omega_d
    if wd <= 0:
        raise ConfigError(f"ODE oracle needs a positive drive frequency, got {wd}")
    if t_end is None:
        slowest = min(params.gamma_c, params.gamma_e)
        if slowest <= 0:
            raise ConfigError("ODE oracle needs t_end when a decay rate is zero")
        t_end = 60.0 / slowest

    A, b = _equations_of_motion(params)
    period = 2.0 * math.pi / wd
    h = period / steps_per_period
    periods = max(2, math.ceil(t_end / period))

    # RK4 is affine in (y, drive); since every period sees the same drive
    # phases, one period is y -> P y + w with P the homogeneous step to the
    # power steps_per_period and w the response from rest.
    hA = h * A
    identity = np.eye(len(b))
    step_matrix = identity + hA @ (identity + hA @ (identity / 2 + hA @ (identity / 6 + hA / 24)))
    period_matrix = np.linalg.matrix_power(step_matrix, steps_per_period)
    response = np.zeros(len(b))
    for j in range(steps_per_period):
        response = _rk4_step(A, b, response, j * h, h, wd)

    y = np.zeros(len(b))
    for _ in range(periods - 2):
        y = period_matrix @ y + response

    y, previous = _project_period(A, b, y, h, wd, steps_per_period)
    y, last = _project_period(A, b, y, h, wd, steps_per_period)

    for label, old, new in (("cavity", previous[0], last[0]), ("emitter", previous[1], last[1])):
        magnitude = abs(new)
        if magnitude == 0:
            continue
        drift = abs(new - old) / magnitude
        if drift > CLASSICAL_CONVERGENCE_TOL:
            raise SolverError(
                f"classical transient not converged: {label} amplitude drifts by "
                f"{drift:.3e} after t={periods * period:.4g}"
            )

    logger.debug(f"ODE oracle integrated {periods} periods at omega_d={wd}")
    return ClassicalAmplitudes(c0=complex(last[0]), ci=complex(last[1]))
