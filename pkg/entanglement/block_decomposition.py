"""
block_decomposition.py - symmetric block states from detection populations.

An SU(2)-invariant state on block (alpha, beta) is sum_j mu_j Omega_j. Its
diagonal in the product basis is

    d(m_a, m_b) = sum_j mu_j / (2j+1) |<j_a m_a; j_b m_b | j, m_a+m_b>|^2

so mu follows from the populations by least squares over all
(alpha+1)(beta+1) equations. The residual doubles as a symmetry self-test.
"""

#####################################
# Import Modules
#####################################

# Import packages from Python Standard Library
from dataclasses import dataclass, field
from functools import lru_cache

# Import external packages
import numpy as np
from scipy import linalg

# Import from local modules
from entanglement.errors import EmptyBlockError, SpinDomainError, SymmetryViolationError
from entanglement.pdc_probability import (
    DEFAULT_SERIES_EPS,
    ModelParams,
    block_counts,
    block_probability,
    joint_count_probability,
    relative_count_weights,
)
from entanglement.spin_algebra import CG_TABLE, BlockLabel
from utils.utils_logger import logger

#####################################
# Defaults
#####################################

DEFAULT_RESIDUAL_TOL = 1e-9
NEGATIVITY_TOL = 1e-10

__all__ = [
    "BlockLabel",
    "SymmetricBlockState",
    "population_vector",
    "extract_mu",
    "block_state",
    "spin_weight_matrix",
    "reconstruct_populations",
    "block_state_at_xi",
]

#####################################
# Domain Types
#####################################


@dataclass(frozen=True)
class SymmetricBlockState:
    """Weights mu_j of the total-spin sectors of one block, j ascending."""

    block: BlockLabel
    mu: np.ndarray = field(compare=False)
    residual: float = 0.0

    def __post_init__(self):
        if self.mu.shape != (self.block.n_spins,):
            raise SpinDomainError(
                f"Block {self.block} needs {self.block.n_spins} weights, got {self.mu.shape}."
            )

    @property
    def mu_zero(self) -> float:
        """Weight of the lowest total spin |j_a - j_b|."""
        return float(self.mu[0])

    def as_dict(self) -> dict:
        return {f"mu_{j:g}": float(w) for j, w in zip(self.block.spins, self.mu)}


#####################################
# CG weights
#####################################


@lru_cache(maxsize=None)
def _weights(alpha: int, beta: int) -> np.ndarray:
    block = BlockLabel(alpha, beta)
    matrix = np.zeros((block.dim, block.n_spins))
    for row, (two_ma, two_mb) in enumerate(block.product_basis()):
        for col, two_j in enumerate(block.two_spins):
            if abs(two_ma + two_mb) <= two_j:
                cg = CG_TABLE.coefficient(alpha, two_ma, beta, two_mb, two_j, two_ma + two_mb)
                matrix[row, col] = cg * cg / (two_j + 1)
    rank = np.linalg.matrix_rank(matrix)
    if rank != block.n_spins:
        raise SpinDomainError(f"CG weight matrix of block {block} has rank {rank}.")
    matrix.setflags(write=False)
    return matrix


def spin_weight_matrix(block: BlockLabel) -> np.ndarray:
    """Matrix W with d = W mu; rows in product-basis order, columns j ascending."""
    return _weights(block.alpha, block.beta)


def reconstruct_populations(state: SymmetricBlockState) -> np.ndarray:
    """Product-basis populations of sum_j mu_j Omega_j."""
    return spin_weight_matrix(state.block) @ state.mu


#####################################
# Operations
#####################################


def population_vector(block: BlockLabel, params: ModelParams) -> np.ndarray:
    """
    Normalized populations d(m_a, m_b) = p(count) / P(alpha, beta).

    Raises EmptyBlockError when P(alpha, beta) = 0.
    """
    total = block_probability(block.alpha, block.beta, params)
    if total <= 0.0:
        raise EmptyBlockError(block.alpha, block.beta)
    return np.array([joint_count_probability(c, params) for c in block_counts(block)]) / total


def extract_mu(
    block: BlockLabel, populations: np.ndarray, residual_tol: float = DEFAULT_RESIDUAL_TOL
) -> SymmetricBlockState:
    """
    Solve d = W mu in least squares.

    Raises SymmetryViolationError if the residual exceeds residual_tol or a
    weight comes out below -1e-10. Weights are not clipped.
    """
    populations = np.asarray(populations, dtype=float)
    if populations.shape != (block.dim,):
        raise SpinDomainError(
            f"Block {block} needs {block.dim} populations, got {populations.shape}."
        )
    weights = spin_weight_matrix(block)
    mu, _, _, _ = linalg.lstsq(weights, populations)
    residual = float(np.max(np.abs(weights @ mu - populations)))
    if residual > residual_tol:
        raise SymmetryViolationError(
            f"Populations of block {block} are not SU(2) invariant (residual {residual:.3e})."
        )
    if mu.min() < -NEGATIVITY_TOL:
        raise SymmetryViolationError(
            f"Block {block} yields negative weight {mu.min():.3e}."
        )
    logger.debug(f"Block {block}: mu={np.round(mu, 12)} residual={residual:.2e}")
    return SymmetricBlockState(block, mu, residual)


def block_state(block: BlockLabel, params: ModelParams, residual_tol: float = DEFAULT_RESIDUAL_TOL) -> SymmetricBlockState:
    """Analytic pipeline: populations from the counting series, then mu."""
    return extract_mu(block, population_vector(block, params), residual_tol)


def block_state_at_xi(
    block: BlockLabel,
    xi_value: float,
    series_eps: float = DEFAULT_SERIES_EPS,
    residual_tol: float = DEFAULT_RESIDUAL_TOL,
) -> SymmetricBlockState:
    """Normalized block state as a function of xi = (1 - eta) tanh(tau) alone."""
    weights = relative_count_weights(block, xi_value, series_eps)
    return extract_mu(block, weights / weights.sum(), residual_tol)
