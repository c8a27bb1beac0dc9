"""
Steady-State Observables

Cavity and ensemble populations, the photon-number diagonal with all
emitters in the ground state, and the scattering signal.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np
import scipy.sparse as sp

from errors import ConfigError
from quantum.hilbert import SparseOperator, basis_index, cavity_ops, lowering_op
from quantum.model import SystemParams
from quantum.steady import DensityMatrix, fock_populations

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ObservableSet:
    """Quantities extracted from one steady state."""

    cavity_pop: float
    ensemble_pop: float
    diagonals: np.ndarray
    scattering: float

    def to_row(self, include_diagonals: bool = False) -> Dict[str, float]:
        row = {
            "cavity_pop": self.cavity_pop,
            "ensemble_pop": self.ensemble_pop,
            "scattering": self.scattering,
        }
        if include_diagonals:
            for n, value in enumerate(self.diagonals):
                row[f"rho_{n}G"] = float(value)
        return row


def expectation(op: SparseOperator, rho: DensityMatrix) -> complex:
    """Tr(op rho)."""
    op = sp.csr_matrix(op)
    if op.shape != rho.data.shape:
        raise ConfigError(f"operator shape {op.shape} does not match state shape {rho.data.shape}")
    # Tr(AB) = sum_ij A_ij B_ji
    return complex(op.multiply(rho.data.T).sum())


def cavity_population(rho: DensityMatrix) -> float:
    """<a^dag a>, with a = b + alpha in a displaced frame."""
    a, a_dag = cavity_ops(rho.space, rho.displacement)
    return expectation(a_dag @ a, rho).real


def emitter_populations(rho: DensityMatrix) -> np.ndarray:
    """<s+_i s-_i> for every emitter."""
    populations = []
    for i in range(1, rho.space.n_emitters + 1):
        sm = lowering_op(i, rho.space)
        populations.append(expectation(sm.conj().T @ sm, rho).real)
    return np.array(populations)


def ensemble_population(rho: DensityMatrix) -> float:
    """Total ensemble population sum_i <s+_i s-_i>."""
    return float(np.sum(emitter_populations(rho)))


def ensemble_population_from_diagonal(rho: DensityMatrix) -> float:
    """Same quantity from the diagonal weighted by excitation count."""
    diagonal = np.real(np.diag(rho.data))
    return float(np.dot(rho.space.excitation_counts(), diagonal))


def diagonal_element(rho: DensityMatrix, n: int, space=None) -> float:
    """
    rho_{n,G}: population of n photons with every emitter in the ground state.

    Args:
        rho: Steady state
        n: Photon number in [0, n_max]
        space: Hilbert space (defaults to the state's own)

    Returns:
        Real diagonal entry at basis_index(n, G), mapped to plain photon
        numbers when the state is displaced
    """
    space = space or rho.space
    if rho.displacement != 0:
        if n < 0:
            raise ConfigError(f"photon number must be non-negative, got {n}")
        return float(fock_populations(rho, n + 1, spin_index=0)[n])
    index = basis_index(n, (0,) * space.n_emitters, space)
    return float(rho.data[index, index].real)


def ground_diagonals(rho: DensityMatrix, count: Optional[int] = None) -> np.ndarray:
    """
    rho_{n,G} for n < count (default n = 0 ... n_max).

    Plain states use the stride-2^N diagonal lookup; displaced states are
    mapped back to plain photon numbers first.
    """
    if rho.displacement == 0 and count is None:
        return np.real(np.diag(rho.data)[:: rho.space.spin_dim]).copy()
    return fock_populations(rho, count, spin_index=0)


def scattering_signal(params: SystemParams, rho: DensityMatrix) -> float:
    """Collected scattering S = gamma_c_rad * <a^dag a> (prefactor 1)."""
    return params.gamma_c_rad * cavity_population(rho)


def observable_set(params: SystemParams, rho: DensityMatrix,
                   diagonal_count: Optional[int] = None) -> ObservableSet:
    """Every plotted quantity for one steady state."""
    cavity_pop = cavity_population(rho)
    return ObservableSet(
        cavity_pop=cavity_pop,
        ensemble_pop=ensemble_population(rho),
        diagonals=ground_diagonals(rho, diagonal_count),
        scattering=params.gamma_c_rad * cavity_pop,
    )
