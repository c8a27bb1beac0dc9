"""
Hilbert Space Construction

This module builds the truncated composite space of one cavity mode and N
two-level emitters, together with the elementary sparse operators acting on
it. The Fock index is the slowest-varying factor, emitter 1 the next:

    index(n; s_1 ... s_N) = n * 2^N + sum_i s_i * 2^(N - i),  s_i in {0=g, 1=e}

Operators are assembled in coordinate form and stored row-compressed.
"""

import logging
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.special import gammaln

from config.settings import MAX_TRACTABLE_EMITTERS
from errors import ConfigError

logger = logging.getLogger(__name__)

# Complex sparse matrix in CSR form (Hamiltonians, jump operators, observables)
SparseOperator = sp.csr_matrix

SIGMA_MINUS = sp.csr_matrix(np.array([[0, 1], [0, 0]], dtype=complex))


@dataclass(frozen=True)
class HilbertSpace:
    """Truncated Fock space of the cavity tensored with N qubits."""

    n_emitters: int
    n_max: int

    def __post_init__(self):
        if int(self.n_emitters) != self.n_emitters or self.n_emitters < 1:
            raise ConfigError(f"n_emitters must be an integer >= 1, got {self.n_emitters}")
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise ConfigError(f"n_max must be an integer >= 1, got {self.n_max}")
        if self.n_emitters > MAX_TRACTABLE_EMITTERS:
            logger.warning(
                f"{self.n_emitters} emitters requested; the full 2^N basis "
                f"(dim {self.dim}) may be slow to solve"
            )

    @property
    def spin_dim(self) -> int:
        return 2 ** self.n_emitters

    @property
    def fock_dim(self) -> int:
        return self.n_max + 1

    @property
    def dim(self) -> int:
        return self.fock_dim * self.spin_dim

    def identity(self) -> SparseOperator:
        return sp.identity(self.dim, dtype=complex, format="csr")

    def excitation_counts(self) -> np.ndarray:
        """Number of excited emitters for every basis index."""
        spin_index = np.arange(self.dim) % self.spin_dim
        counts = np.zeros(self.dim, dtype=int)
        for bit in range(self.n_emitters):
            counts += (spin_index >> bit) & 1
        return counts

    def photon_numbers(self) -> np.ndarray:
        """Photon number n for every basis index."""
        return np.arange(self.dim) // self.spin_dim


def annihilation_op(n_max: int) -> SparseOperator:
    """
    Cavity annihilation operator on the truncated Fock space.

    Args:
        n_max: Highest photon number kept (>= 1)

    Returns:
        (n_max+1) x (n_max+1) matrix with <n-1|a|n> = sqrt(n)
    """
    if int(n_max) != n_max or n_max < 1:
        raise ConfigError(f"n_max must be an integer >= 1, got {n_max}")

    n = np.arange(1, n_max + 1)
    matrix = sp.coo_matrix(
        (np.sqrt(n).astype(complex), (n - 1, n)),
        shape=(n_max + 1, n_max + 1),
    )
    return matrix.tocsr()


def tensor_product(a: SparseOperator, b: SparseOperator) -> SparseOperator:
    """Kronecker product a (x) b; dimensions multiply."""
    return sp.kron(a, b, format="csr")


def embed_cavity(op: SparseOperator, space: HilbertSpace) -> SparseOperator:
    """Lift a Fock-space operator to the full space (identity on the emitters)."""
    return tensor_product(op, sp.identity(space.spin_dim, dtype=complex, format="csr"))


def lowering_op(i: int, space: HilbertSpace) -> SparseOperator:
    """
    Pauli lowering operator of emitter i embedded in the full space.

    Args:
        i: Emitter index, 1-based
        space: The composite Hilbert space

    Returns:
        sigma_-^(i) acting as identity on the Fock factor and on every other emitter
    """
    if int(i) != i or not 1 <= i <= space.n_emitters:
        raise ConfigError(f"emitter index must lie in [1, {space.n_emitters}], got {i}")

    before = sp.identity(space.fock_dim * 2 ** (i - 1), dtype=complex, format="csr")
    after = sp.identity(2 ** (space.n_emitters - i), dtype=complex, format="csr")
    return tensor_product(tensor_product(before, SIGMA_MINUS), after)


def cavity_ops(space: HilbertSpace,
               displacement: complex = 0j) -> Tuple[SparseOperator, SparseOperator]:
    """
    Annihilation and creation operators of the cavity on the full space.

    With a nonzero displacement alpha the Fock basis counts excitations
    around alpha, and the returned field is b + alpha with its adjoint.
    """
    a = embed_cavity(annihilation_op(space.n_max), space)
    if displacement != 0:
        a = (a + displacement * space.identity()).tocsr()
    return a, a.conj().T.tocsr()


def displacement_matrix(alpha: complex, rows: int, cols: int) -> np.ndarray:
    """
    Fock matrix elements <n|D(alpha)|m> for n < rows and m < cols.

    Column 0 is the coherent state |alpha>; the others follow from
    D|m> = (a^dag - alpha*) D|m-1> / sqrt(m), which only reaches down one
    row, so the entries carry no cutoff error.

    Args:
        alpha: Coherent amplitude
        rows: Number of photon numbers n kept
        cols: Number of photon numbers m kept

    Returns:
        Dense complex (rows, cols) array
    """
    if int(rows) != rows or int(cols) != cols or rows < 1 or cols < 1:
        raise ConfigError(f"displacement matrix needs positive integer shape, got ({rows}, {cols})")

    n = np.arange(rows)
    matrix = np.zeros((rows, cols), dtype=complex)
    if alpha == 0:
        diagonal = np.arange(min(rows, cols))
        matrix[diagonal, diagonal] = 1.0
        return matrix

    log_modulus = -0.5 * abs(alpha) ** 2 + n * np.log(abs(alpha)) - 0.5 * gammaln(n + 1)
    column = np.exp(log_modulus) * np.exp(1j * n * np.angle(alpha))
    matrix[:, 0] = column
    raise_factor = np.sqrt(n)
    for m in range(1, cols):
        raised = np.zeros(rows, dtype=complex)
        raised[1:] = raise_factor[1:] * column[:-1]
        column = (raised - np.conj(alpha) * column) / np.sqrt(m)
        matrix[:, m] = column
    return matrix


def basis_index(n: int, spins: Sequence[int], space: HilbertSpace) -> int:
    """Basis index of |n; s_1 ... s_N>."""
    if not 0 <= n <= space.n_max:
        raise ConfigError(f"photon number must lie in [0, {space.n_max}], got {n}")
    if len(spins) != space.n_emitters:
        raise ConfigError(
            f"expected {space.n_emitters} spin labels, got {len(spins)}"
        )

    index = n * space.spin_dim
    for position, s in enumerate(spins, start=1):
        if s not in (0, 1):
            raise ConfigError(f"spin labels must be 0 or 1, got {s}")
        index += s * 2 ** (space.n_emitters - position)
    return index


def basis_label(index: int, space: HilbertSpace) -> Tuple[int, Tuple[int, ...]]:
    """Inverse of basis_index."""
    if not 0 <= index < space.dim:
        raise ConfigError(f"basis index must lie in [0, {space.dim}), got {index}")

    n, spin_index = divmod(index, space.spin_dim)
    spins = tuple(
        (spin_index >> (space.n_emitters - position)) & 1
        for position in range(1, space.n_emitters + 1)
    )
    return n, spins


def is_hermitian(op, atol: float = 1e-14) -> bool:
    """Entrywise check A == A^dagger within atol."""
    difference = op - op.conj().T
    if sp.issparse(difference):
        return difference.nnz == 0 or float(np.max(np.abs(difference.data))) <= atol
    return bool(np.max(np.abs(difference), initial=0.0) <= atol)
