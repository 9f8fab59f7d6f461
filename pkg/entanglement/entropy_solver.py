"""
entropy_solver.py - relative entropy of entanglement of symmetric block states.

Both rho = sum mu_j Omega_j and the closest PPT state sigma = sum zeta_j Omega_j
are diagonal in the projector basis, and each Omega_j is maximally mixed on
its sector, so S(rho || sigma) reduces to the classical divergence
sum_j mu_j log2(mu_j / zeta_j). It is minimized over the PPT polytope.

The minimizer runs in two phases:
1. away-step Frank-Wolfe over the polytope vertices with Armijo backtracking;
2. active-set Newton polish on the face Frank-Wolfe identified, which
   drives the KKT residual down to rounding level.
Results are reported in bits.
"""

#####################################
# Import Modules
#####################################

# Import packages from Python Standard Library
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

# Import external packages
import numpy as np
from scipy import linalg
from scipy.optimize import nnls
from scipy.special import rel_entr

# Import from local modules
from entanglement.block_decomposition import (
    DEFAULT_RESIDUAL_TOL,
    SymmetricBlockState,
    block_state,
)
from entanglement.errors import SolverError, SpinDomainError
from entanglement.pdc_probability import ModelParams, block_probability, captured_mass
from entanglement.ppt_geometry import (
    FEASIBILITY_TOL,
    PptPolytope,
    is_ppt,
    maximally_mixed_weights,
    ppt_constraints,
)
from entanglement.spin_algebra import BlockLabel
from utils.utils_logger import logger

#####################################
# Defaults
#####################################

DEFAULT_KKT_TOL = 1e-9
FRANK_WOLFE_GAP = 1e-10
FRANK_WOLFE_MAX_ITER = 5000
ACTIVE_TOL = 1e-7
LOG_FLOOR = 1e-300
# squares of anything smaller underflow
HESSIAN_FLOOR = 1e-150
ARMIJO_C = 1e-4
# weights below this are rounding noise from extraction and count as zero
MU_FLOOR = 1e-14

LN2 = math.log(2.0)

#####################################
# Domain Types
#####################################


@dataclass(frozen=True)
class EntropyResult:
    """Relative entropy of entanglement of one block, in bits."""

    block: BlockLabel
    e_r: float
    zeta_star: np.ndarray = field(compare=False)
    kkt_residual: float
    iterations: int = 0
    kkt_tol: float = DEFAULT_KKT_TOL

    @property
    def certified(self) -> bool:
        """True when the KKT residual is within the tolerance the solve was asked for."""
        return self.kkt_residual <= self.kkt_tol


@dataclass(frozen=True)
class BlockContribution:
    block: BlockLabel
    probability: float
    result: Optional[EntropyResult]

    @property
    def weighted(self) -> float:
        return 0.0 if self.result is None else self.probability * self.result.e_r


@dataclass(frozen=True)
class TotalEntropy:
    """
    Block-wise total sum P(alpha,beta) E_R(rho^(alpha,beta)) inside the cutoff.

    Truncation makes this a lower bound; captured_mass quantifies how much
    probability the cutoff retains.
    """

    params: ModelParams
    e_r_total: float
    captured_mass: float
    blocks: Tuple[BlockContribution, ...]

    @property
    def cutoff(self) -> Tuple[int, int]:
        return self.params.alpha_max, self.params.beta_max

    @property
    def is_lower_bound(self) -> bool:
        return True

    @property
    def certified(self) -> bool:
        return all(c.result is None or c.result.certified for c in self.blocks)

    def per_block(self) -> Dict[Tuple[int, int], float]:
        return {(c.block.alpha, c.block.beta): c.weighted for c in self.blocks}


#####################################
# Objective
#####################################


def binary_entropy(p: float) -> float:
    """H2(p) in bits, with 0 log 0 = 0."""
    return float(-(rel_entr(p, 1.0) + rel_entr(1.0 - p, 1.0)) / LN2)


def werner_relative_entropy(mu_zero: float) -> float:
    """Closed form for block (1,1): 1 - H2(mu_0) outside the PPT set, else 0."""
    return 1.0 - binary_entropy(mu_zero) if mu_zero > 0.5 else 0.0


def relative_entropy_bits(mu: np.ndarray, zeta: np.ndarray) -> float:
    """sum mu_j log2(mu_j / zeta_j); +inf when zeta_j = 0 < mu_j."""
    return float(np.sum(rel_entr(mu, zeta)) / LN2)


def _objective(mu: np.ndarray, zeta: np.ndarray) -> float:
    if np.any(zeta[mu > 0] <= 0.0):
        return math.inf
    return float(np.sum(rel_entr(mu, zeta)))


def _gradient(mu: np.ndarray, zeta: np.ndarray) -> np.ndarray:
    return -mu / np.maximum(zeta, LOG_FLOOR)


#####################################
# KKT certificate
#####################################


def kkt_residual(mu: np.ndarray, zeta: np.ndarray, polytope: PptPolytope, active_tol: float = 1e-8) -> float:
    """
    Optimality certificate for zeta (bits).

    Fits grad = lambda 1 + C_act^T nu + pi with nu, pi >= 0 by non-negative
    least squares over the active constraints and returns the larger of the
    fit residual and the primal infeasibility.
    """
    gradient = _gradient(mu, zeta) / LN2
    values = polytope.values(zeta)
    columns = [np.ones_like(zeta), -np.ones_like(zeta)]
    columns += [row for row, value in zip(polytope.constraints, values) if value <= active_tol]
    columns += [np.eye(len(zeta))[j] for j in range(len(zeta)) if mu[j] == 0.0 and zeta[j] <= active_tol]
    _, stationarity = nnls(np.column_stack(columns), gradient)
    infeasibility = max(0.0, -values.min(), -zeta.min(), abs(zeta.sum() - 1.0))
    return float(max(stationarity, infeasibility))


#####################################
# Phase 1: away-step Frank-Wolfe
#####################################


def _armijo(mu: np.ndarray, zeta: np.ndarray, direction: np.ndarray, slope: float, step_max: float) -> float:
    """Backtracking from step_max until the Armijo condition holds."""
    base = _objective(mu, zeta)
    step = step_max
    while step > 1e-16:
        if _objective(mu, zeta + step * direction) <= base + ARMIJO_C * step * slope:
            return step
        step *= 0.5
    return 0.0


def _frank_wolfe(mu: np.ndarray, start: np.ndarray, vertices: np.ndarray, gap_tol: float, max_iter: int) -> Tuple[np.ndarray, int]:
    atoms = np.vstack([vertices, start])
    weights = np.zeros(len(atoms))
    weights[-1] = 1.0
    zeta = start.copy()
    n_vertices = len(vertices)

    for iteration in range(1, max_iter + 1):
        gradient = _gradient(mu, zeta)
        toward = int(np.argmin(vertices @ gradient))
        fw_direction = vertices[toward] - zeta
        gap = -float(gradient @ fw_direction)
        if gap <= gap_tol:
            return zeta, iteration

        held = np.flatnonzero(weights > 0.0)
        away = int(held[np.argmax(atoms[held] @ gradient)])
        away_direction = zeta - atoms[away]

        if gap >= -float(gradient @ away_direction) or weights[away] >= 1.0:
            step = _armijo(mu, zeta, fw_direction, -gap, 1.0)
            weights *= 1.0 - step
            weights[toward] += step
        else:
            step_max = weights[away] / (1.0 - weights[away])
            step = _armijo(mu, zeta, away_direction, float(gradient @ away_direction), step_max)
            weights *= 1.0 + step
            weights[away] -= step
            if step >= step_max:
                weights[away] = 0.0
        if step == 0.0:
            return zeta, iteration
        weights = np.clip(weights, 0.0, None)
        zeta = weights @ atoms

    logger.debug(f"Frank-Wolfe stopped at {max_iter} iterations with n_vertices={n_vertices}.")
    return zeta, max_iter


#####################################
# Phase 2: active-set Newton polish
#####################################


def _polish(mu: np.ndarray, zeta: np.ndarray, polytope: PptPolytope, max_outer: int = 20, max_newton: int = 60) -> np.ndarray:
    size = len(zeta)
    inequalities = np.vstack([polytope.constraints, np.eye(size)])
    # bounds on zeta_j only matter where mu_j = 0
    usable = np.concatenate([np.ones(len(polytope.constraints), bool), mu == 0.0])
    active = set(np.flatnonzero(usable & (inequalities @ zeta <= ACTIVE_TOL)))

    for _ in range(max_outer):
        multipliers = np.zeros(0)
        rows = sorted(active)
        for _ in range(max_newton):
            equalities = np.vstack([np.ones(size), inequalities[rows]]) if rows else np.ones((1, size))
            targets = np.zeros(len(equalities))
            targets[0] = 1.0
            # mu_j = 0 entries have no curvature
            curvature = np.divide(mu, np.maximum(zeta, HESSIAN_FLOOR) ** 2, out=np.zeros_like(mu), where=mu > 0.0)
            hessian = np.diag(curvature)
            kkt = np.block([[hessian, equalities.T], [equalities, np.zeros((len(equalities),) * 2)]])
            rhs = np.concatenate([-_gradient(mu, zeta), targets - equalities @ zeta])
            solution = linalg.lstsq(kkt, rhs)[0]
            step, multipliers = solution[:size], -solution[size:]

            # largest step keeping the inactive inequalities and mu-supported zeta positive
            scale = 1.0
            blocking = None
            values = inequalities @ zeta
            rates = inequalities @ step
            for i in np.flatnonzero(usable):
                if i in active or rates[i] >= 0.0:
                    continue
                limit = -values[i] / rates[i]
                if limit < scale:
                    scale, blocking = max(limit, 0.0), i
            falling = (mu > 0.0) & (step < 0.0)
            if np.any(falling):
                scale = min(scale, 0.99 * float(np.min(-zeta[falling] / step[falling])))
            zeta = zeta + scale * step
            if blocking is not None:
                active.add(blocking)
                rows = sorted(active)
                continue
            if np.max(np.abs(step)) < 1e-15:
                break

        # multipliers[0] belongs to the normalization; the rest to active rows
        inequality_multipliers = multipliers[1:]
        if inequality_multipliers.size == 0 or inequality_multipliers.min() >= -1e-12:
            break
        active.discard(rows[int(np.argmin(inequality_multipliers))])

    return zeta


#####################################
# Operations
#####################################


def block_relative_entropy(
    state: SymmetricBlockState,
    polytope: PptPolytope,
    start: Optional[np.ndarray] = None,
    kkt_tol: float = DEFAULT_KKT_TOL,
) -> EntropyResult:
    """
    Minimize sum_j mu_j log2(mu_j / zeta_j) over the PPT polytope of the block.

    `start` must be a feasible point with zeta_j > 0 wherever mu_j > 0; the
    maximally mixed weights are used by default. The problem is convex, so
    the returned minimum is global.
    """
    if state.block != polytope.block:
        raise SpinDomainError(f"State block {state.block} does not match polytope {polytope.block}.")
    mu = np.asarray(state.mu, dtype=float)
    mu = np.where(mu < MU_FLOOR, 0.0, mu)

    if is_ppt(state, polytope):
        return EntropyResult(state.block, 0.0, mu.copy(), 0.0, 0)

    start = maximally_mixed_weights(state.block) if start is None else np.asarray(start, dtype=float)
    if not polytope.contains(start, tol=FEASIBILITY_TOL) or np.any(start[mu > 0] <= 0.0):
        raise SolverError(f"Start point {start} is not a usable feasible point of block {state.block}.")

    try:
        zeta, iterations = _frank_wolfe(mu, start, polytope.vertices, FRANK_WOLFE_GAP, FRANK_WOLFE_MAX_ITER)
        residual = kkt_residual(mu, zeta, polytope)
        if residual > kkt_tol:
            polished = _polish(mu, zeta, polytope)
            if polytope.contains(polished, tol=1e-9):
                polished_residual = kkt_residual(mu, polished, polytope)
                if polished_residual <= residual:
                    zeta, residual = polished, polished_residual
            else:
                logger.debug(f"Block {state.block}: polished point left the polytope; keeping Frank-Wolfe point.")
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as e:
        raise SolverError(f"Block {state.block}: numerical failure in the solver: {e}") from e

    if not np.isfinite(residual):
        raise SolverError(f"Block {state.block}: KKT residual is not finite.")
    if residual > kkt_tol:
        logger.warning(f"Block {state.block}: KKT residual {residual:.2e} above {kkt_tol:.0e}.")
    e_r = max(0.0, relative_entropy_bits(mu, zeta))
    return EntropyResult(state.block, e_r, zeta, residual, iterations, kkt_tol)


def total_relative_entropy(
    params: ModelParams,
    kkt_tol: float = DEFAULT_KKT_TOL,
    residual_tol: float = DEFAULT_RESIDUAL_TOL,
) -> TotalEntropy:
    """
    sum_{alpha <= alpha_max, beta <= beta_max} P(alpha,beta) E_R(rho^(alpha,beta)).

    Empty blocks contribute zero and carry no EntropyResult.
    """
    contributions = []
    for alpha in range(params.alpha_max + 1):
        for beta in range(params.beta_max + 1):
            block = BlockLabel(alpha, beta)
            probability = block_probability(alpha, beta, params)
            if probability <= 0.0:
                contributions.append(BlockContribution(block, 0.0, None))
                continue
            if block.n_spins == 1:
                # one total-spin sector: the state is the identity on it
                result = EntropyResult(block, 0.0, np.ones(1), 0.0, 0)
            else:
                result = block_relative_entropy(
                    block_state(block, params, residual_tol), ppt_constraints(block), kkt_tol=kkt_tol
                )
            contributions.append(BlockContribution(block, probability, result))

    total = math.fsum(c.weighted for c in contributions)
    mass = captured_mass(params)
    logger.debug(f"eta={params.eta:.4f} tau={params.tau:.4f}: E_R={total:.10f} mass={mass:.10f}")
    return TotalEntropy(params, total, mass, tuple(contributions))
