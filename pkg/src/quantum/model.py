"""
Driven Tavis-Cummings Model

This module holds the system parameters and builds the Hamiltonian in the
frame rotating at the drive frequency, plus the Lindblad Liouvillian.

Vectorization is column-stacking: vec(A rho B) = (B^T (x) A) vec(rho).

Every builder takes an optional cavity displacement alpha. The cavity field
is then written a = b + alpha and the Fock basis counts the excitations b
around the coherent amplitude, which keeps strongly driven states inside a
small cutoff.
"""

import logging
import math
from dataclasses import dataclass, fields, replace
from typing import Any, Dict, List, Tuple

import numpy as np
import scipy.sparse as sp

from config.settings import DEFAULT_SYSTEM_PARAMS
from errors import ConfigError
from quantum.hilbert import (
    HilbertSpace,
    SparseOperator,
    cavity_ops,
    lowering_op,
    tensor_product,
)

logger = logging.getLogger(__name__)

RATE_FIELDS = ("gamma_c", "gamma_c_rad", "gamma_e", "g_col", "omega_drive_amp")
FREQUENCY_FIELDS = ("omega_c", "omega_e", "omega_d")


@dataclass(frozen=True)
class SystemParams:
    """Physical parameters in units of omega_c (hbar = 1)."""

    omega_c: float = DEFAULT_SYSTEM_PARAMS["omega_c"]
    omega_e: float = DEFAULT_SYSTEM_PARAMS["omega_e"]
    omega_d: float = DEFAULT_SYSTEM_PARAMS["omega_d"]
    gamma_c: float = DEFAULT_SYSTEM_PARAMS["gamma_c"]
    gamma_c_rad: float = DEFAULT_SYSTEM_PARAMS["gamma_c_rad"]
    gamma_e: float = DEFAULT_SYSTEM_PARAMS["gamma_e"]
    g_col: float = DEFAULT_SYSTEM_PARAMS["g_col"]
    n_emitters: int = DEFAULT_SYSTEM_PARAMS["n_emitters"]
    omega_drive_amp: float = DEFAULT_SYSTEM_PARAMS["omega_drive_amp"]

    def __post_init__(self):
        for name in RATE_FIELDS + FREQUENCY_FIELDS:
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ConfigError(f"{name} must be finite, got {value}")
            if value < 0:
                raise ConfigError(f"{name} must be non-negative, got {value}")
        if self.gamma_c_rad > self.gamma_c:
            raise ConfigError(
                f"gamma_c_rad ({self.gamma_c_rad}) cannot exceed gamma_c ({self.gamma_c})"
            )
        if int(self.n_emitters) != self.n_emitters or self.n_emitters < 1:
            raise ConfigError(f"n_emitters must be an integer >= 1, got {self.n_emitters}")

    @property
    def g(self) -> float:
        """Single-emitter coupling g = g_col / sqrt(N)."""
        return self.g_col / math.sqrt(self.n_emitters)

    @property
    def delta_c(self) -> float:
        return self.omega_c - self.omega_d

    @property
    def delta_e(self) -> float:
        return self.omega_e - self.omega_d

    def with_updates(self, **changes) -> "SystemParams":
        return replace(self, **changes)

    def to_dict(self) -> Dict[str, Any]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class Liouvillian:
    """Lindblad generator acting on column-stacked density matrices."""

    matrix: SparseOperator
    space: HilbertSpace
    params: SystemParams
    displacement: complex = 0j

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def bare_cavity_amplitude(params: SystemParams) -> complex:
    """Steady coherent amplitude of the driven cavity without emitters, -Od / (2 dc - i gc)."""
    denominator = 2.0 * params.delta_c - 1j * params.gamma_c
    if denominator == 0:
        return 0j
    return -params.omega_drive_amp / denominator


def _check_space(params: SystemParams, space: HilbertSpace):
    if space.n_emitters != params.n_emitters:
        raise ConfigError(
            f"Hilbert space holds {space.n_emitters} emitters but params "
            f"specify {params.n_emitters}"
        )


def hamiltonian_rotating(params: SystemParams, space: HilbertSpace,
                         displacement: complex = 0j) -> SparseOperator:
    """
    Tavis-Cummings Hamiltonian in the frame rotating at omega_d.

    H = dc a^dag a + sum_i [de s+_i s-_i + g (a^dag s-_i + a s+_i)] + (Od/2)(a^dag + a)

    Args:
        params: System parameters
        space: Hilbert space consistent with params.n_emitters
        displacement: Coherent amplitude the Fock basis is centred on

    Returns:
        Hermitian sparse matrix of dimension space.dim
    """
    _check_space(params, space)

    a, a_dag = cavity_ops(space, displacement)
    hamiltonian = params.delta_c * (a_dag @ a)
    hamiltonian = hamiltonian + 0.5 * params.omega_drive_amp * (a_dag + a)

    g = params.g
    for i in range(1, space.n_emitters + 1):
        sm = lowering_op(i, space)
        sp_ = sm.conj().T.tocsr()
        hamiltonian = hamiltonian + params.delta_e * (sp_ @ sm)
        hamiltonian = hamiltonian + g * (a_dag @ sm + a @ sp_)

    hamiltonian = sp.csr_matrix(hamiltonian, dtype=complex)
    hamiltonian.eliminate_zeros()
    return hamiltonian


def jump_operators(params: SystemParams, space: HilbertSpace,
                   displacement: complex = 0j) -> List[Tuple[float, SparseOperator]]:
    """Collapse channels (rate, operator): cavity decay plus one per emitter."""
    a, _ = cavity_ops(space, displacement)
    channels = [(params.gamma_c, a)]
    for i in range(1, space.n_emitters + 1):
        channels.append((params.gamma_e, lowering_op(i, space)))
    return channels


def liouvillian(params: SystemParams, space: HilbertSpace,
                displacement: complex = 0j) -> Liouvillian:
    """
    Build the Lindblad superoperator for the driven Tavis-Cummings system.

    L = -i (I (x) H - H^T (x) I)
        + sum_k g_k [conj(L_k) (x) L_k - 1/2 I (x) L_k^dag L_k - 1/2 (L_k^dag L_k)^T (x) I]

    Args:
        params: System parameters
        space: Hilbert space consistent with params.n_emitters
        displacement: Coherent amplitude the Fock basis is centred on; the
            constant terms it adds to H and to the cavity jump cancel in L

    Returns:
        Liouvillian of dimension space.dim^2
    """
    _check_space(params, space)

    hamiltonian = hamiltonian_rotating(params, space, displacement)
    identity = space.identity()

    generator = -1j * (
        tensor_product(identity, hamiltonian)
        - tensor_product(hamiltonian.T.tocsr(), identity)
    )

    for rate, jump in jump_operators(params, space, displacement):
        if rate == 0:
            continue
        number = (jump.conj().T @ jump).tocsr()
        generator = generator + rate * (
            tensor_product(jump.conj(), jump)
            - 0.5 * tensor_product(identity, number)
            - 0.5 * tensor_product(number.T.tocsr(), identity)
        )

    generator = sp.csr_matrix(generator, dtype=complex)
    generator.sum_duplicates()
    generator.eliminate_zeros()

    logger.debug(
        f"Liouvillian for N={space.n_emitters}, n_max={space.n_max}: "
        f"{generator.shape[0]} unknowns, {generator.nnz} nonzeros"
    )
    return Liouvillian(matrix=generator, space=space, params=params,
                       displacement=complex(displacement))


def vectorize(rho: np.ndarray) -> np.ndarray:
    """Column-stacking vec()."""
    return np.asarray(rho).reshape(-1, order="F")


def unvectorize(vector: np.ndarray, dim: int) -> np.ndarray:
    """Inverse of vectorize()."""
    return np.asarray(vector).reshape(dim, dim, order="F")


def trace_functional(dim: int) -> np.ndarray:
    """vec(I): dotting it with vec(rho) yields Tr(rho)."""
    row = np.zeros(dim * dim, dtype=complex)
    row[:: dim + 1] = 1.0
    return row
