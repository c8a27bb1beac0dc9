"""
Steady-State Solver

This module finds the trace-normalized null vector of the Liouvillian,
integrates the master equation with RK4 as an independent oracle, and picks
the Fock truncation automatically.

The steady state is obtained by replacing the first row of L with the trace
functional vec(I)^T and solving L' vec(rho) = e_0: dense LU for small
systems, sparse LU in the middle range and GMRES preconditioned by an
incomplete LU above ITERATIVE_SOLVE_MIN unknowns, followed by a few steps of
iterative refinement. Whatever the method, the relative residual is checked
before a state is returned.

Strongly driven rows are solved around the bare-cavity coherent amplitude
(see quantum.model); DensityMatrix records that displacement and
fock_populations() maps back to plain photon numbers.
"""

import logging
import math
import time
import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from config.settings import (
    DENSE_SOLVE_MAX,
    DISPLACED_FRAME_MIN_PHOTONS,
    GMRES_MAXITER,
    GMRES_RESTART,
    GMRES_RTOL,
    HERMITICITY_TOL,
    ILU_DROP_TOL,
    ILU_FILL_FACTOR,
    ITERATIVE_SOLVE_MIN,
    NMAX_HARD_CAP,
    NMAX_START,
    NMAX_STEP,
    POSITIVITY_TOL,
    PRIOR_BOUND_FACTOR,
    REFINEMENT_STEPS,
    RK4_TRACE_DRIFT_TOL,
    STEADY_STATE_TOL,
    TAIL_TOL,
    TRACE_TOL,
)
from errors import ConfigError, SolverError, TruncationError
from quantum.hilbert import HilbertSpace, displacement_matrix
from quantum.model import (
    Liouvillian,
    SystemParams,
    bare_cavity_amplitude,
    liouvillian,
    trace_functional,
    unvectorize,
    vectorize,
)

logger = logging.getLogger(__name__)

SOLVE_METHODS = ("auto", "dense", "sparse", "iterative")


@dataclass
class DensityMatrix:
    """
    Dense density matrix over a HilbertSpace.

    A nonzero displacement alpha means the Fock index counts excitations of
    b = a - alpha; the plain-basis state is D(alpha) rho D(alpha)^dag.
    """

    data: np.ndarray
    space: HilbertSpace
    residual: Optional[float] = None
    displacement: complex = 0j

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=complex)
        self.displacement = complex(self.displacement)
        if self.data.shape != (self.space.dim, self.space.dim):
            raise ConfigError(
                f"density matrix shape {self.data.shape} does not match "
                f"space dimension {self.space.dim}"
            )

    @property
    def dim(self) -> int:
        return self.space.dim

    @property
    def trace(self) -> complex:
        return complex(np.trace(self.data))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(0.5 * (self.data + self.data.conj().T))[0])

    def validate(self) -> "DensityMatrix":
        """
        Assert Hermiticity, unit trace and positivity.

        Raises:
            SolverError: If any invariant is violated
        """
        if not np.all(np.isfinite(self.data)):
            raise SolverError("density matrix contains non-finite entries")

        asymmetry = float(np.max(np.abs(self.data - self.data.conj().T)))
        if asymmetry > HERMITICITY_TOL:
            raise SolverError(f"density matrix not Hermitian (deviation {asymmetry:.3e})")

        trace_error = abs(self.trace - 1.0)
        if trace_error > TRACE_TOL:
            raise SolverError(f"density matrix trace off by {trace_error:.3e}")

        lowest = self.min_eigenvalue()
        if lowest < -POSITIVITY_TOL:
            raise SolverError(f"density matrix not positive (min eigenvalue {lowest:.3e})")
        return self

    @classmethod
    def pure(cls, index: int, space: HilbertSpace, displacement: complex = 0j) -> "DensityMatrix":
        """Projector onto a single basis state."""
        data = np.zeros((space.dim, space.dim), dtype=complex)
        data[index, index] = 1.0
        return cls(data, space, displacement=displacement)


def trace_distance(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Half the trace norm of rho - sigma."""
    if rho.space != sigma.space or rho.displacement != sigma.displacement:
        raise ConfigError("trace distance needs both states in the same space and frame; "
                          "map them with undisplaced() first")
    difference = rho.data - sigma.data
    difference = 0.5 * (difference + difference.conj().T)
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(difference))))


def _operator_inf_norm(matrix: sp.spmatrix) -> float:
    return float(abs(matrix).sum(axis=1).max())


def _constrained_system(L: Liouvillian) -> sp.csc_matrix:
    """L with its first row replaced by the trace functional."""
    dim = L.space.dim
    matrix = L.matrix.tocsr(copy=True)
    matrix.data[matrix.indptr[0]:matrix.indptr[1]] = 0
    matrix.eliminate_zeros()

    diagonal_positions = np.arange(dim) * (dim + 1)
    trace_row = sp.csr_matrix(
        (np.ones(dim, dtype=complex), (np.zeros(dim, dtype=int), diagonal_positions)),
        shape=matrix.shape,
    )
    return (matrix + trace_row).tocsc()


def _dense_solver(system: sp.csc_matrix) -> Callable[[np.ndarray], np.ndarray]:
    with warnings.catch_warnings():
        warnings.simplefilter("error", la.LinAlgWarning)
        try:
            factors = la.lu_factor(system.toarray(), check_finite=True)
        except (la.LinAlgError, la.LinAlgWarning, ValueError) as e:
            raise SolverError(f"steady-state system is singular or ill-conditioned: {e}") from e

    logger.debug(f"dense LU solve with {system.shape[0]} unknowns")
    return lambda b: la.lu_solve(factors, b)


def _sparse_solver(system: sp.csc_matrix) -> Callable[[np.ndarray], np.ndarray]:
    try:
        factors = spla.splu(system)
    except (RuntimeError, MemoryError) as e:
        raise SolverError(f"sparse LU of the steady-state system failed: {e}") from e

    logger.debug(
        f"sparse LU solve with {system.shape[0]} unknowns, fill {factors.L.nnz + factors.U.nnz}"
    )
    return factors.solve


def _iterative_solver(system: sp.csc_matrix) -> Callable[[np.ndarray], np.ndarray]:
    """Restarted GMRES with an incomplete-LU preconditioner."""
    try:
        ilu = spla.spilu(system, drop_tol=ILU_DROP_TOL, fill_factor=ILU_FILL_FACTOR)
    except (RuntimeError, MemoryError) as e:
        raise SolverError(f"incomplete LU of the steady-state system failed: {e}") from e
    preconditioner = spla.LinearOperator(system.shape, matvec=ilu.solve, dtype=complex)

    logger.debug(
        f"GMRES solve with {system.shape[0]} unknowns, ILU fill {ilu.L.nnz + ilu.U.nnz}"
    )

    def solve(b: np.ndarray) -> np.ndarray:
        solution, info = spla.gmres(system, b, M=preconditioner, rtol=GMRES_RTOL, atol=0.0,
                                    restart=GMRES_RESTART, maxiter=GMRES_MAXITER)
        if info < 0:
            raise SolverError(f"GMRES rejected the steady-state system (info={info})")
        if info > 0:
            logger.warning(f"GMRES stopped after {info} iterations above rtol={GMRES_RTOL:.0e}")
        return solution

    return solve


def _pick_method(unknowns: int, method: str) -> str:
    if method not in SOLVE_METHODS:
        raise ConfigError(f"solve method must be one of {SOLVE_METHODS}, got '{method}'")
    if method != "auto":
        return method
    if unknowns > ITERATIVE_SOLVE_MIN:
        return "iterative"
    if unknowns <= DENSE_SOLVE_MAX:
        return "dense"
    return "sparse"


def _solve_constrained(system: sp.csc_matrix, rhs: np.ndarray, refinement_steps: int,
                       method: str = "auto") -> np.ndarray:
    """Solve system x = rhs, raising SolverError on (near-)singularity."""
    builders = {"dense": _dense_solver, "sparse": _sparse_solver, "iterative": _iterative_solver}
    solve = builders[_pick_method(system.shape[0], method)](system)

    solution = solve(rhs)
    for _ in range(refinement_steps):
        correction = solve(rhs - system @ solution)
        solution = solution + correction

    if not np.all(np.isfinite(solution)):
        raise SolverError("steady-state solve produced non-finite values")
    return solution


def steady_state(L: Liouvillian, tol: float = STEADY_STATE_TOL,
                 refinement_steps: int = REFINEMENT_STEPS, method: str = "auto") -> DensityMatrix:
    """
    Solve L[rho_ss] = 0 with Tr(rho_ss) = 1.

    Args:
        L: Liouvillian to solve
        tol: Maximum relative residual ||L vec(rho)||_inf / ||L||_inf
        refinement_steps: Iterative refinement passes after the first solve
        method: "dense", "sparse", "iterative" or "auto" (by number of unknowns)

    Returns:
        Validated DensityMatrix carrying the achieved relative residual and
        the displacement of L

    Raises:
        SolverError: Singular system, residual above tol, or invalid state
    """
    dim = L.space.dim
    system = _constrained_system(L)
    rhs = np.zeros(dim * dim, dtype=complex)
    rhs[0] = 1.0

    solution = _solve_constrained(system, rhs, refinement_steps, method)

    rho = unvectorize(solution, dim)
    rho = 0.5 * (rho + rho.conj().T)
    trace = np.trace(rho).real
    if not trace > 0:
        raise SolverError(f"steady-state solve returned trace {trace:.3e}")
    rho = rho / trace

    scale = _operator_inf_norm(L.matrix)
    absolute = float(np.max(np.abs(L.matrix @ vectorize(rho)))) if dim else 0.0
    residual = absolute / scale if scale > 0 else absolute
    if residual > tol:
        raise SolverError(f"steady-state residual {residual:.3e} exceeds tolerance {tol:.1e}")

    return DensityMatrix(rho, L.space, residual=residual, displacement=L.displacement).validate()


def evolve_oracle(L: Liouvillian, rho0: DensityMatrix, t_end: float, dt: float) -> DensityMatrix:
    """
    Integrate d vec(rho)/dt = L vec(rho) with classical fixed-step RK4.

    Args:
        L: Liouvillian
        rho0: Initial state, in the space and frame of L
        t_end: Final time
        dt: Requested step (shortened so t_end is hit exactly)

    Returns:
        State at t_end

    Raises:
        SolverError: If the trace drifts by more than the configured tolerance
    """
    if dt <= 0 or t_end < 0:
        raise ConfigError(f"need dt > 0 and t_end >= 0, got dt={dt}, t_end={t_end}")
    if rho0.space != L.space or rho0.displacement != L.displacement:
        raise ConfigError("initial state and Liouvillian live in different spaces or frames")

    steps = max(1, math.ceil(t_end / dt)) if t_end > 0 else 0
    h = t_end / steps if steps else 0.0
    generator = L.matrix
    functional = trace_functional(L.space.dim)

    state = vectorize(rho0.data).astype(complex)
    initial_trace = functional @ state
    check_every = max(1, steps // 100)

    for step in range(1, steps + 1):
        k1 = generator @ state
        k2 = generator @ (state + 0.5 * h * k1)
        k3 = generator @ (state + 0.5 * h * k2)
        k4 = generator @ (state + h * k3)
        state = state + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)

        if step % check_every == 0 or step == steps:
            drift = abs(functional @ state - initial_trace)
            if not np.isfinite(drift) or drift > RK4_TRACE_DRIFT_TOL:
                raise SolverError(
                    f"RK4 unstable at t={step * h:.4g}: trace drift {drift:.3e} (dt={h:.3g})"
                )

    return DensityMatrix(unvectorize(state, L.space.dim), L.space, displacement=L.displacement)


def fock_populations(rho: DensityMatrix, count: Optional[int] = None,
                     spin_index: Optional[int] = None) -> np.ndarray:
    """
    Plain photon-number populations P(n) for n < count.

    Args:
        rho: State in any frame
        count: Number of photon numbers (defaults to the state's Fock dimension)
        spin_index: Restrict to one emitter configuration (0 is all ground);
            None sums over all of them

    Returns:
        Real array of length count
    """
    space = rho.space
    count = space.fock_dim if count is None else int(count)
    if count < 1:
        raise ConfigError(f"count must be >= 1, got {count}")
    spins = range(space.spin_dim) if spin_index is None else (int(spin_index),)

    if rho.displacement == 0:
        diagonal = np.real(np.diag(rho.data)).reshape(space.fock_dim, space.spin_dim)
        populations = diagonal[:, list(spins)].sum(axis=1)
        padded = np.zeros(max(count, space.fock_dim))
        padded[:space.fock_dim] = populations
        return padded[:count]

    shift = displacement_matrix(rho.displacement, count, space.fock_dim)
    populations = np.zeros(count)
    for s in spins:
        block = rho.data[s::space.spin_dim, s::space.spin_dim]
        populations += np.real(np.einsum("nm,mk,nk->n", shift, block, shift.conj()))
    return populations


def undisplaced(rho: DensityMatrix, n_max: int) -> DensityMatrix:
    """The state in the plain Fock basis up to n_max, D(alpha) rho D(alpha)^dag."""
    target = HilbertSpace(rho.space.n_emitters, n_max)
    shift = displacement_matrix(rho.displacement, target.fock_dim, rho.space.fock_dim)
    kernel = np.kron(shift, np.eye(rho.space.spin_dim))
    return DensityMatrix(kernel @ rho.data @ kernel.conj().T, target, residual=rho.residual)


def frame_displacement(params: SystemParams,
                       min_photons: float = DISPLACED_FRAME_MIN_PHOTONS) -> complex:
    """Bare-cavity amplitude when it holds at least min_photons photons, else 0."""
    alpha = bare_cavity_amplitude(params)
    return alpha if abs(alpha) ** 2 >= min_photons else 0j


def prior_nmax(params: SystemParams) -> int:
    """Lower bound ceil(3 * Omega_d^2 / gamma_c^2) on the Fock cutoff."""
    if params.gamma_c <= 0:
        return NMAX_START
    return math.ceil(PRIOR_BOUND_FACTOR * params.omega_drive_amp ** 2 / params.gamma_c ** 2)


def fock_tail(rho: DensityMatrix, levels: int = 2) -> float:
    """Combined population of the highest `levels` Fock levels of the state's own basis."""
    space = rho.space
    diagonal = np.real(np.diag(rho.data))
    top = space.photon_numbers() > space.n_max - levels
    return float(np.sum(diagonal[top]))


def _cap_error(params: SystemParams, cap: int, displacement: complex = 0j) -> TruncationError:
    frame = f", displaced by |alpha|={abs(displacement):.3g}" if displacement != 0 else ""
    return TruncationError(
        f"Fock cutoff would exceed the hard cap n_max={cap} "
        f"(Omega_d={params.omega_drive_amp:.4g}, N={params.n_emitters}{frame}); raise the cap"
    )


def _search_cutoff(params: SystemParams, tail_tol: float, n_max: int, step: int, cap: int,
                   displacement: complex) -> Tuple[int, DensityMatrix]:
    started = time.time()
    while n_max <= cap:
        space = HilbertSpace(params.n_emitters, n_max)
        rho = steady_state(liouvillian(params, space, displacement))
        tail = fock_tail(rho)
        logger.debug(f"n_max={n_max}: tail population {tail:.3e}")
        if tail < tail_tol:
            logger.info(
                f"auto_truncate chose n_max={n_max} for N={params.n_emitters}, "
                f"Omega_d={params.omega_drive_amp:.4g}, |alpha|={abs(displacement):.3g} "
                f"({time.time() - started:.2f}s)"
            )
            return n_max, rho
        n_max += step
    raise _cap_error(params, cap, displacement)


def auto_truncate(params: SystemParams, tail_tol: float = TAIL_TOL,
                  start: int = NMAX_START, step: int = NMAX_STEP,
                  cap: int = NMAX_HARD_CAP, displacement: complex = 0j) -> int:
    """
    Smallest Fock cutoff whose steady state leaves less than tail_tol
    population in the top two photon levels.

    Without a displacement the search starts at the prior bound. If the
    drive is strong enough for frame_displacement() to centre the basis,
    the state is solved once around the bare-cavity amplitude and the plain
    photon distribution is read off it; re-solving at the plain cutoff would
    need hundreds of Fock levels. With a displacement given, the cutoff
    counts excitations around it and the prior bound does not apply.

    Args:
        params: System parameters (drive strength included)
        tail_tol: Probability tolerance in (0, 1)
        start: First cutoff tried (raised to the prior bound if smaller)
        step: Cutoff increment between attempts
        cap: Hard cap on the cutoff
        displacement: Coherent amplitude the basis is centred on

    Returns:
        The chosen n_max

    Raises:
        TruncationError: If the cap is exceeded
    """
    if not 0 < tail_tol < 1:
        raise ConfigError(f"tail_tol must lie in (0, 1), got {tail_tol}")

    if displacement != 0:
        return _search_cutoff(params, tail_tol, start, step, cap, displacement)[0]

    n_max = max(start, prior_nmax(params))
    shift = frame_displacement(params)
    if shift == 0:
        return _search_cutoff(params, tail_tol, n_max, step, cap, 0j)[0]
    if n_max > cap:
        raise _cap_error(params, cap)

    _, centred = _search_cutoff(params, tail_tol, start, step, cap, shift)
    populations = fock_populations(centred, cap + 1)
    for candidate in range(n_max, cap + 1, step):
        tail = populations[candidate - 1] + populations[candidate]
        if tail < tail_tol:
            logger.info(
                f"auto_truncate chose n_max={candidate} for N={params.n_emitters}, "
                f"Omega_d={params.omega_drive_amp:.4g} from the displaced-frame state"
            )
            return candidate
    raise _cap_error(params, cap)
