"""
Configuration settings for the Tavis-Cummings saturation toolkit

All rates are in units of the cavity frequency omega_c (hbar = omega_c = 1).
"""

import os
from pathlib import Path

VERSION = "0.1.0"

# Base paths
PROJECT_ROOT = Path(__file__).parent.parent
RESULTS_DIR = PROJECT_ROOT / "results"
LOGS_DIR = PROJECT_ROOT / "logs"

# Baseline system parameters (resonant emitters, moderately lossy cavity)
DEFAULT_SYSTEM_PARAMS = {
    "omega_c": 1.0,
    "omega_e": 1.0,
    "omega_d": 1.0,
    "gamma_c": 0.03,
    "gamma_c_rad": 0.03,
    "gamma_e": 0.0003,
    "g_col": 0.03,
    "n_emitters": 1,
    "omega_drive_amp": 0.0075,  # 0.25 * g_col
}

# Above this many emitters the full 2^N basis gets slow
MAX_TRACTABLE_EMITTERS = 4

# Steady-state solver
STEADY_STATE_TOL = 1e-10  # relative residual ||L rho||_inf / ||L||_inf
DENSE_SOLVE_MAX = 4096  # dim^2 at or below this uses dense LU
REFINEMENT_STEPS = 2
ITERATIVE_SOLVE_MIN = 20000  # unknowns above this go to preconditioned GMRES
ILU_DROP_TOL = 1e-6
ILU_FILL_FACTOR = 20
GMRES_RTOL = 1e-12
GMRES_RESTART = 200
GMRES_MAXITER = 50
HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-10
POSITIVITY_TOL = 1e-8

# Fock truncation
TAIL_TOL = 1e-8
NMAX_START = 4
NMAX_STEP = 4
NMAX_HARD_CAP = 40
PRIOR_BOUND_FACTOR = 3.0  # n_max >= ceil(3 * Omega_d^2 / gamma_c^2)
# Rows whose bare-cavity coherent state holds at least this many photons are
# solved in a Fock basis centred on that amplitude
DISPLACED_FRAME_MIN_PHOTONS = 4.0

# RK4 oracle
RK4_TRACE_DRIFT_TOL = 1e-6

# Classical ODE oracle
CLASSICAL_STEPS_PER_PERIOD = 1024
CLASSICAL_CONVERGENCE_TOL = 1e-6

# Analysis
ONSET_THRESHOLD = 0.3
INFERENCE_MIN_SLOPE = 2.5
# Slope plateau window: cavity population at most this fraction of the bare-cavity one
PLATEAU_SUPPRESSION_MAX = 3e-3

# Sweep grids: drive grids in units of g_col, spectrum grids in units of omega_c
DRIVE_GRID = {"start": 1e-3, "stop": 10.0, "count": 60, "spacing": "log"}
SPECTRUM_GRID = {"start": 0.9, "stop": 1.1, "count": 201, "spacing": "lin"}
CRITICAL_GRID = {"start": 1e-4, "stop": 1.0, "count": 41, "spacing": "log"}
DEFAULT_N_LIST = (1,)
DEFAULT_THREADS = 1

# CSV output
CSV_FLOAT_FORMAT = "%.17g"

# Environment variables
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")

# Critical-table scan used when none is configured (gamma_e = 0.5%, 1%, 5% of gamma_c)
CRITICAL_GAMMA_E_SCAN = (0.00015, 0.0003, 0.0015)
