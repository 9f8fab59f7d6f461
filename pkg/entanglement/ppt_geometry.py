"""
ppt_geometry.py - PPT polytopes of symmetric block states.

For a block (alpha, beta), a symmetric operator sum_j zeta_j Omega_j has the
partial transpose sum_j zeta_j B_j with B_j = Pi_j^{T_b} / (2j+1). The B_j
commute (partial transposition maps the U x U commutant onto the U x U*
commutant, which for SU(2) is unitarily equivalent to it), so in a common
eigenbasis positivity becomes the linear system C zeta >= 0 with
C[k, j] = eigenvalue of B_j on common eigenvector k.
"""

#####################################
# Import Modules
#####################################

# Import packages from Python Standard Library
import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import List, Tuple

# Import external packages
import numpy as np
from scipy import linalg

# Import from local modules
from entanglement.block_decomposition import SymmetricBlockState
from entanglement.errors import DiagonalizationError, SpinDomainError
from entanglement.spin_algebra import BlockLabel, all_projectors
from utils.utils_logger import logger

#####################################
# Tolerances
#####################################

COMMUTATOR_TOL = 1e-10
LEAKAGE_TOL = 1e-9
DEDUP_TOL = 1e-9
FEASIBILITY_TOL = 1e-10

# Seed of the random positive combination used to find the common eigenbasis
COMBINATION_SEED = 20030113

#####################################
# Partial transpose
#####################################


def partial_transpose(matrix: np.ndarray, block: BlockLabel) -> np.ndarray:
    """Transpose the b-subsystem indices of an operator on block (alpha, beta)."""
    matrix = np.asarray(matrix)
    if matrix.shape != (block.dim, block.dim):
        raise SpinDomainError(
            f"Block {block} needs a {block.dim}x{block.dim} matrix, got {matrix.shape}."
        )
    d_a, d_b = block.alpha + 1, block.beta + 1
    return matrix.reshape(d_a, d_b, d_a, d_b).transpose(0, 3, 2, 1).reshape(block.dim, block.dim)


def symmetric_operator(zeta: np.ndarray, block: BlockLabel) -> np.ndarray:
    """sum_j zeta_j Omega_j in the product basis."""
    return sum(w * p.normalized() for w, p in zip(zeta, all_projectors(block)))


def min_pt_eigenvalue(zeta: np.ndarray, block: BlockLabel) -> float:
    """Smallest eigenvalue of the partial transpose of sum_j zeta_j Omega_j."""
    if block.dim == 1:
        return float(zeta[0])
    return float(linalg.eigvalsh(partial_transpose(symmetric_operator(zeta, block), block))[0])


#####################################
# Common eigenbasis
#####################################


def _max_offdiagonal(matrix: np.ndarray) -> float:
    return float(np.max(np.abs(matrix - np.diag(np.diag(matrix))), initial=0.0))


def _jacobi_joint_diagonalize(matrices: np.ndarray, threshold: float = 1e-14, max_sweeps: int = 100) -> np.ndarray:
    """
    Orthogonal V making every real symmetric matrices[i] as diagonal as possible.

    Extended Jacobi method with Givens rotations; stops when every rotation
    in a sweep has |sin| below threshold.
    """
    stack = np.array(matrices, dtype=float)
    size = stack.shape[1]
    basis = np.eye(size)
    for _ in range(max_sweeps):
        rotated = False
        for p in range(size):
            for q in range(p + 1, size):
                diff = stack[:, p, p] - stack[:, q, q]
                off = stack[:, p, q] + stack[:, q, p]
                ton = diff @ diff - off @ off
                toff = 2.0 * diff @ off
                theta = 0.5 * math.atan2(toff, ton + math.hypot(ton, toff))
                c, s = math.cos(theta), math.sin(theta)
                if abs(s) <= threshold:
                    continue
                rotated = True
                col_p, col_q = stack[:, :, p].copy(), stack[:, :, q].copy()
                stack[:, :, p] = c * col_p + s * col_q
                stack[:, :, q] = -s * col_p + c * col_q
                row_p, row_q = stack[:, p, :].copy(), stack[:, q, :].copy()
                stack[:, p, :] = c * row_p + s * row_q
                stack[:, q, :] = -s * row_p + c * row_q
                vec_p, vec_q = basis[:, p].copy(), basis[:, q].copy()
                basis[:, p] = c * vec_p + s * vec_q
                basis[:, q] = -s * vec_p + c * vec_q
        if not rotated:
            break
    return basis


def transposed_projectors(block: BlockLabel) -> List[np.ndarray]:
    """B_j = Pi_j^{T_b} / (2j+1) for each allowed j, ascending."""
    return [partial_transpose(p.normalized(), block) for p in all_projectors(block)]


def common_eigenbasis(matrices: List[np.ndarray]) -> Tuple[np.ndarray, float]:
    """
    Orthogonal basis diagonalizing every matrix, with its worst off-diagonal leakage.

    Diagonalizes a fixed-seed random positive combination first and falls
    back to Jacobi joint diagonalization when the leakage is too large.
    """
    rng = np.random.default_rng(COMBINATION_SEED)
    combination = sum(w * m for w, m in zip(rng.uniform(0.5, 1.5, len(matrices)), matrices))
    _, basis = linalg.eigh(combination)
    leakage = max(_max_offdiagonal(basis.T @ m @ basis) for m in matrices)
    if leakage > LEAKAGE_TOL:
        logger.warning(f"Eigenbasis leakage {leakage:.2e}; refining by joint diagonalization.")
        basis = basis @ _jacobi_joint_diagonalize([basis.T @ m @ basis for m in matrices])
        leakage = max(_max_offdiagonal(basis.T @ m @ basis) for m in matrices)
    return basis, leakage


def _dedup_rows(rows: np.ndarray, tol: float = DEDUP_TOL) -> np.ndarray:
    """Distinct rows, sorted lexicographically, merged within tol."""
    ordered = rows[np.lexsort(rows.T[::-1])]
    kept: List[np.ndarray] = []
    for row in ordered:
        if not any(np.max(np.abs(row - other)) <= tol for other in kept):
            kept.append(row)
    return np.array(kept)


#####################################
# Domain Types
#####################################


@dataclass(frozen=True)
class PptCheck:
    """Outcome of a PPT test: feasibility and the worst constraint value."""

    is_ppt: bool
    margin: float

    def __bool__(self) -> bool:
        return self.is_ppt


@dataclass(frozen=True)
class PptPolytope:
    """{zeta in simplex : C zeta >= 0} for one block."""

    block: BlockLabel
    constraints: np.ndarray = field(compare=False, repr=False)

    @property
    def n_spins(self) -> int:
        return self.block.n_spins

    def values(self, zeta: np.ndarray) -> np.ndarray:
        return self.constraints @ np.asarray(zeta, dtype=float)

    def margin(self, zeta: np.ndarray) -> float:
        return float(self.values(zeta).min())

    def contains(self, zeta: np.ndarray, tol: float = FEASIBILITY_TOL) -> bool:
        zeta = np.asarray(zeta, dtype=float)
        return (
            zeta.min() >= -tol
            and abs(zeta.sum() - 1.0) <= tol * max(1, self.n_spins)
            and self.margin(zeta) >= -tol
        )

    @cached_property
    def vertices(self) -> np.ndarray:
        """
        Vertices of the polytope, one per row.

        A vertex makes n_spins - 1 independent inequalities tight together
        with sum(zeta) = 1; every such combination is tried.
        """
        size = self.n_spins
        if size == 1:
            return np.ones((1, 1))
        inequalities = np.vstack([np.eye(size), self.constraints])
        found: List[np.ndarray] = []
        for rows in itertools.combinations(range(len(inequalities)), size - 1):
            system = np.vstack([inequalities[list(rows)], np.ones(size)])
            if abs(np.linalg.det(system)) < 1e-12:
                continue
            rhs = np.zeros(size)
            rhs[-1] = 1.0
            point = np.linalg.solve(system, rhs)
            if (inequalities @ point).min() < -FEASIBILITY_TOL:
                continue
            if not any(np.max(np.abs(point - v)) <= DEDUP_TOL for v in found):
                found.append(point)
        return _dedup_rows(np.array(found))

    def halfspaces(self) -> Tuple[np.ndarray, np.ndarray]:
        """
        Non-trivial constraints as A x <= b in x = (zeta_0 .. zeta_{k-2}).

        zeta_{k-1} = 1 - sum(x) is eliminated. Rows with all coefficients of C
        non-negative follow from zeta >= 0 and are dropped; each kept row is
        scaled so its first non-zero coefficient has magnitude one.
        """
        size = self.n_spins
        if size == 1:
            return np.zeros((0, 0)), np.zeros(0)
        rows, bounds = [], []
        for c in self.constraints:
            if c.min() >= -DEDUP_TOL:
                continue
            a = -(c[:-1] - c[-1])
            b = c[-1]
            nonzero = np.flatnonzero(np.abs(a) > DEDUP_TOL)
            if nonzero.size == 0:
                continue
            rows.append(np.append(a, b) / abs(a[nonzero[0]]))
        if not rows:
            return np.zeros((0, size - 1)), np.zeros(0)
        merged = _dedup_rows(np.array(rows))
        return merged[:, :-1], merged[:, -1]

    def max_weight(self, index: int) -> float:
        """Largest zeta_index over the polytope."""
        return float(self.vertices[:, index].max())

    def to_dict(self, max_vertex_spins: int = 4) -> dict:
        a, b = self.halfspaces()
        record = {
            "block": [self.block.alpha, self.block.beta],
            "spins": self.block.spins,
            "constraint_matrix": self.constraints.tolist(),
            "halfspaces": {"A": a.tolist(), "b": b.tolist()},
        }
        if self.n_spins <= max_vertex_spins:
            record["vertices"] = self.vertices.tolist()
        return record


#####################################
# Operations
#####################################


@lru_cache(maxsize=None)
def _constraints(alpha: int, beta: int) -> np.ndarray:
    block = BlockLabel(alpha, beta)
    matrices = transposed_projectors(block)
    worst = max(
        (float(np.max(np.abs(a @ b - b @ a))) for a, b in itertools.combinations(matrices, 2)),
        default=0.0,
    )
    if worst > COMMUTATOR_TOL:
        raise DiagonalizationError(f"B_j of block {block} do not commute ({worst:.2e}).")

    basis, leakage = common_eigenbasis(matrices)
    if leakage > LEAKAGE_TOL:
        raise DiagonalizationError(
            f"Common eigenbasis of block {block} leaks {leakage:.2e} off the diagonal."
        )
    rows = np.column_stack([np.einsum("ik,ij,jk->k", basis, m, basis) for m in matrices])
    constraints = _dedup_rows(rows)
    constraints.setflags(write=False)
    logger.debug(f"Block {block}: {len(constraints)} PPT constraint rows.")
    return constraints


def ppt_constraints(block: BlockLabel) -> PptPolytope:
    """PPT polytope of block (alpha, beta). Built once per block and cached."""
    return _polytope(block.alpha, block.beta)


@lru_cache(maxsize=None)
def _polytope(alpha: int, beta: int) -> PptPolytope:
    return PptPolytope(BlockLabel(alpha, beta), _constraints(alpha, beta))


def is_ppt(state: SymmetricBlockState, polytope: PptPolytope, tol: float = FEASIBILITY_TOL) -> PptCheck:
    """Feasibility of C mu >= -tol, with the margin min_k (C mu)_k."""
    if state.block != polytope.block:
        raise SpinDomainError(f"State block {state.block} does not match polytope {polytope.block}.")
    margin = polytope.margin(state.mu)
    return PptCheck(margin >= -tol, margin)


def maximally_mixed_weights(block: BlockLabel) -> np.ndarray:
    """mu_j = (2j+1) / ((alpha+1)(beta+1)), the weights of the identity."""
    return np.array([two_j + 1 for two_j in block.two_spins], dtype=float) / block.dim


def random_feasible_point(polytope: PptPolytope, rng: np.random.Generator) -> np.ndarray:
    """Strictly positive point of the polytope: random vertex mixture blended with the identity."""
    weights = rng.dirichlet(np.ones(len(polytope.vertices)))
    share = rng.uniform(0.2, 0.8)
    return share * (weights @ polytope.vertices) + (1.0 - share) * maximally_mixed_weights(polytope.block)
