"""
oracle_sim.py - brute-force truncated Fock-space path used to cross-check the analytic pipeline.

States are kept block-diagonal: one dense matrix per photon-number pair
(alpha, beta), in the product basis of spin_algebra (a_h major, then b_h).
The phase-averaged source state only populates (n, n) blocks, and the loss
channel maps blocks to blocks, so nothing outside this structure is ever
needed.

Single-mode loss uses the Kraus family
    L_k = (1-eta)^(k/2) / sqrt(k!) * eta^(a^dagger a / 2) a^k
whose matrix elements are <x-k| L_k |x> = sqrt(C(x,k)) (1-eta)^(k/2) eta^((x-k)/2).
"""

#####################################
# Import Modules
#####################################

# Import packages from Python Standard Library
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, Iterable, List, Optional, Tuple

# Import external packages
import numpy as np
from scipy import linalg
from scipy.special import gammaln, xlogy
from scipy.stats import binom

# Import from local modules
from entanglement.errors import EmptyBlockError, SpinDomainError
from entanglement.pdc_probability import pair_tail_bound
from entanglement.spin_algebra import BlockLabel, all_projectors
from utils.utils_logger import logger

#####################################
# Defaults
#####################################

DEFAULT_TRUNCATION_TOL = 1e-10
DEFAULT_SYMMETRY_PHOTONS = 8
DEFAULT_SEED = 1729

BlockKey = Tuple[int, int]

#####################################
# Domain Types
#####################################


@dataclass(frozen=True, eq=False)
class TruncatedState:
    """Block-diagonal density operator on the four-mode Fock space."""

    n_max: int
    blocks: Dict[BlockKey, np.ndarray] = field(repr=False)
    truncation_error: float = 0.0

    def trace(self) -> float:
        return float(sum(np.trace(m).real for m in self.blocks.values()))

    def min_eigenvalue(self) -> float:
        return min(float(linalg.eigvalsh(m)[0]) for m in self.blocks.values())

    def hermiticity_defect(self) -> float:
        return max(float(np.max(np.abs(m - m.conj().T))) for m in self.blocks.values())


@dataclass(frozen=True, eq=False)
class StokesGenerators:
    """J = J_a + J_b on one block, built from explicit mode operators."""

    block: BlockLabel
    jx: np.ndarray = field(repr=False)
    jy: np.ndarray = field(repr=False)
    jz: np.ndarray = field(repr=False)

    def commutator_defect(self) -> float:
        """Largest deviation from [Jx, Jy] = i Jz and its cyclic partners."""
        pairs = ((self.jx, self.jy, self.jz), (self.jy, self.jz, self.jx), (self.jz, self.jx, self.jy))
        return max(float(np.max(np.abs(a @ b - b @ a - 1j * c))) for a, b, c in pairs)

    def rotation(self, axis_angle: np.ndarray) -> np.ndarray:
        """V(U) = exp(i n.J) for U = exp(i n.sigma/2)."""
        generator = axis_angle[0] * self.jx + axis_angle[1] * self.jy + axis_angle[2] * self.jz
        return linalg.expm(1j * generator)


#####################################
# Source state
#####################################


def pair_cutoff(tau: float, tol: float = DEFAULT_TRUNCATION_TOL) -> int:
    """Smallest pair number n_max whose closed-form tail mass is below tol."""
    n_max = 0
    while pair_tail_bound(tau, n_max) >= tol:
        n_max += 1
    return n_max


def lossy_pair_cutoff(tau: float, eta: float, max_photons: int, tol: float = DEFAULT_TRUNCATION_TOL) -> int:
    """
    Smallest n_max whose dropped pairs put less than tol into the blocks
    with alpha + beta <= max_photons after loss.

    n pairs carry 2n photons and each survives with probability eta, so the
    mass pair n sends below max_photons is w_n * P[Bin(2n, eta) <= max_photons].
    """
    n_limit = pair_cutoff(tau, tol)
    n = np.arange(n_limit + 1)
    log_weights = np.log(n + 1) + xlogy(n, np.tanh(tau) ** 2) - 4.0 * np.log(np.cosh(tau))
    contributions = np.exp(log_weights) * binom.cdf(max_photons, 2 * n, eta)
    # tails[k] = mass of pairs k+1 .. n_limit, plus everything above n_limit
    tails = np.append(np.cumsum(contributions[::-1])[::-1][1:], 0.0) + pair_tail_bound(tau, n_limit)
    return max(1, int(np.argmax(tails < tol)))


def singlet_vector(pairs: int) -> np.ndarray:
    """
    |psi^n_-> = (n+1)^(-1/2) sum_m (-1)^m |n-m>_{a_h} |m>_{a_v} |m>_{b_h} |n-m>_{b_v}
    in the product basis of block (n, n).
    """
    block = BlockLabel(pairs, pairs)
    vector = np.zeros(block.dim)
    for m in range(pairs + 1):
        vector[block.index(pairs - m, m)] = (-1.0) ** m
    return vector / np.sqrt(pairs + 1)


def build_pdc_state(tau: float, n_max: Optional[int] = None) -> TruncatedState:
    """
    Phase-averaged down-conversion state truncated at n_max pairs:
        sum_{n <= n_max} (n+1) tanh^(2n)(tau) / cosh^4(tau) |psi^n_-><psi^n_-|
    n_max defaults to the smallest cutoff with tail mass below 1e-10, and at
    least one pair so the two-qubit sector is always represented.
    """
    if n_max is None:
        n_max = max(1, pair_cutoff(tau))
    if n_max < 1:
        raise SpinDomainError(f"n_max must be at least 1, got {n_max}.")
    x = np.tanh(tau) ** 2
    blocks = {}
    for n in range(n_max + 1):
        weight = (n + 1) * x**n / np.cosh(tau) ** 4
        vector = singlet_vector(n)
        blocks[(n, n)] = weight * np.outer(vector, vector)
    tail = pair_tail_bound(tau, n_max)
    logger.debug(f"PDC state tau={tau}: n_max={n_max}, tail mass {tail:.2e}")
    return TruncatedState(n_max, blocks, tail)


#####################################
# Loss channel
#####################################


def kraus_element(lost: np.ndarray, occupation: np.ndarray, eta: float) -> np.ndarray:
    """<x-k| L_k |x> for k photons lost from occupation x (zero when k > x)."""
    lost = np.asarray(lost)
    occupation = np.asarray(occupation)
    valid = (lost >= 0) & (lost <= occupation)
    kept = np.where(valid, occupation - lost, 0)
    log_binomial = gammaln(occupation + 1) - gammaln(np.where(valid, lost, 0) + 1) - gammaln(kept + 1)
    log_value = 0.5 * (log_binomial + xlogy(lost, 1.0 - eta) + xlogy(kept, eta))
    return np.where(valid, np.exp(log_value), 0.0)


def kraus_operators(eta: float, n_max: int) -> List[np.ndarray]:
    """Single-mode Kraus matrices L_0 .. L_{n_max} on occupations 0 .. n_max."""
    occupations = np.arange(n_max + 1)
    operators = []
    for lost in range(n_max + 1):
        matrix = np.zeros((n_max + 1, n_max + 1))
        source = occupations[lost:]
        matrix[source - lost, source] = kraus_element(np.full_like(source, lost), source, eta)
        operators.append(matrix)
    return operators


def kraus_completeness_defect(eta: float, n_max: int) -> float:
    """max |sum_k L_k^dagger L_k - 1| on occupations 0 .. n_max."""
    total = sum(k.T @ k for k in kraus_operators(eta, n_max))
    return float(np.max(np.abs(total - np.eye(n_max + 1))))


def _side_coefficients(photons_in: int, photons_out: int, eta: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Kraus coefficients of one spatial side, composed from the h and v modes.

    Row k_h (photons lost from h, the rest lost from v) and column i (output
    h occupation). Returns the coefficients and the input h occupations.
    """
    lost = photons_in - photons_out
    lost_h = np.arange(lost + 1)[:, None]
    out_h = np.arange(photons_out + 1)[None, :]
    in_h = out_h + lost_h
    in_v = photons_in - in_h
    coefficients = kraus_element(lost_h, in_h, eta) * kraus_element(lost - lost_h, in_v, eta)
    return coefficients, in_h


def _lossy_block(matrix: np.ndarray, block_in: BlockKey, block_out: BlockKey, eta: float) -> np.ndarray:
    alpha, beta = block_in
    alpha_out, beta_out = block_out
    tensor = matrix.reshape(alpha + 1, beta + 1, alpha + 1, beta + 1)
    ca, ia = _side_coefficients(alpha, alpha_out, eta)
    cb, ib = _side_coefficients(beta, beta_out, eta)
    window = tensor[
        ia[:, None, :, None, None, None],
        ib[None, :, None, :, None, None],
        ia[:, None, None, None, :, None],
        ib[None, :, None, None, None, :],
    ]
    out = np.einsum("xi,yj,xk,yl,xyijkl->ijkl", ca, cb, ca, cb, window)
    size = (alpha_out + 1) * (beta_out + 1)
    return out.reshape(size, size)


def apply_loss(state: TruncatedState, eta: float, max_photons: Optional[int] = None) -> TruncatedState:
    """
    Apply the same single-mode loss channel to a_h, a_v, b_h and b_v.

    Only output blocks with alpha + beta <= max_photons are computed when a
    limit is given; blocks above it are dropped.
    """
    if not 0.0 <= eta <= 1.0:
        raise SpinDomainError(f"Transmittivity eta={eta} outside [0, 1].")
    blocks: Dict[BlockKey, np.ndarray] = {}
    for (alpha, beta), matrix in state.blocks.items():
        for alpha_out in range(alpha + 1):
            for beta_out in range(beta + 1):
                if max_photons is not None and alpha_out + beta_out > max_photons:
                    continue
                key = (alpha_out, beta_out)
                contribution = _lossy_block(matrix, (alpha, beta), key, eta)
                blocks[key] = blocks[key] + contribution if key in blocks else contribution
    return TruncatedState(state.n_max, blocks, state.truncation_error)


#####################################
# Symmetry
#####################################


def _side_stokes(photons: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Jx, Jy, Jz of one spatial side restricted to `photons` total photons."""
    size = photons + 1
    lower = np.diag(np.sqrt(np.arange(1, size)), 1)
    a_h = np.kron(lower, np.eye(size))
    a_v = np.kron(np.eye(size), lower)
    raising = a_h.T @ a_v
    jx = (raising + raising.T) / 2.0
    jy = (raising - raising.T) / 2j
    jz = (a_h.T @ a_h - a_v.T @ a_v) / 2.0
    keep = [n_h * size + (photons - n_h) for n_h in range(size)]
    return tuple(op[np.ix_(keep, keep)] for op in (jx, jy, jz))


@lru_cache(maxsize=None)
def _generators(alpha: int, beta: int) -> StokesGenerators:
    side_a = _side_stokes(alpha)
    side_b = _side_stokes(beta)
    eye_a, eye_b = np.eye(alpha + 1), np.eye(beta + 1)
    total = [np.kron(a, eye_b) + np.kron(eye_a, b) for a, b in zip(side_a, side_b)]
    return StokesGenerators(BlockLabel(alpha, beta), *total)


def stokes_generators(block: BlockLabel) -> StokesGenerators:
    return _generators(block.alpha, block.beta)


def haar_su2(rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """
    Haar-random U in SU(2) from a normalized quaternion.

    Returns U and the vector n with U = exp(i n.sigma/2).
    """
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    paulis = (
        np.array([[0, 1], [1, 0]], dtype=complex),
        np.array([[0, -1j], [1j, 0]], dtype=complex),
        np.array([[1, 0], [0, -1]], dtype=complex),
    )
    unitary = q[0] * np.eye(2) + 1j * sum(c * p for c, p in zip(q[1:], paulis))
    half_angle = np.arccos(np.clip(q[0], -1.0, 1.0))
    sine = np.sin(half_angle)
    axis_angle = np.zeros(3) if sine < 1e-15 else 2.0 * half_angle * q[1:] / sine
    return unitary, axis_angle


def _symmetry_blocks(state: TruncatedState, max_photons: int) -> Iterable[Tuple[BlockKey, np.ndarray]]:
    for key in sorted(state.blocks):
        if sum(key) <= max_photons:
            yield key, state.blocks[key]


def check_symmetry(
    state: TruncatedState,
    u_samples: int,
    seed: int = DEFAULT_SEED,
    max_photons: int = DEFAULT_SYMMETRY_PHOTONS,
) -> float:
    """
    Largest |V(U) rho V(U)^dagger - rho| over random U and blocks with alpha+beta <= max_photons.
    """
    if u_samples < 1:
        raise SpinDomainError("u_samples must be at least 1.")
    rng = np.random.default_rng(seed)
    samples = [haar_su2(rng)[1] for _ in range(u_samples)]
    worst = 0.0
    for (alpha, beta), matrix in _symmetry_blocks(state, max_photons):
        generators = _generators(alpha, beta)
        for axis_angle in samples:
            rotation = generators.rotation(axis_angle)
            rotated = rotation @ matrix @ rotation.conj().T
            worst = max(worst, float(np.max(np.abs(rotated - matrix))))
    return worst


def rotate_side_a(state: TruncatedState, axis_angle: np.ndarray) -> TruncatedState:
    """Apply exp(i n.J_a) to side a only, breaking the joint symmetry."""
    blocks = {}
    for (alpha, beta), matrix in state.blocks.items():
        jx, jy, jz = _side_stokes(alpha)
        side = linalg.expm(1j * (axis_angle[0] * jx + axis_angle[1] * jy + axis_angle[2] * jz))
        rotation = np.kron(side, np.eye(beta + 1))
        blocks[(alpha, beta)] = rotation @ matrix @ rotation.conj().T
    return TruncatedState(state.n_max, blocks, state.truncation_error)


#####################################
# Blocks and mu
#####################################


def block_weight(state: TruncatedState, block: BlockLabel) -> float:
    """P(alpha, beta) of the state; zero for blocks it does not carry."""
    matrix = state.blocks.get((block.alpha, block.beta))
    return 0.0 if matrix is None else float(np.trace(matrix).real)


def extract_block(state: TruncatedState, block: BlockLabel) -> Tuple[float, np.ndarray]:
    """
    P(alpha, beta) and the normalized block state rho^(alpha, beta).

    Raises EmptyBlockError for blocks with zero probability.
    """
    probability = block_weight(state, block)
    if probability <= 0.0:
        raise EmptyBlockError(block.alpha, block.beta)
    return probability, state.blocks[(block.alpha, block.beta)] / probability


def measure_mu(matrix: np.ndarray, block: BlockLabel) -> np.ndarray:
    """mu_j = tr(rho Pi_j) for each allowed total spin, ascending."""
    if matrix.shape != (block.dim, block.dim):
        raise SpinDomainError(f"Block {block} needs a {block.dim}x{block.dim} matrix.")
    return np.array([float(np.trace(matrix @ p.entries).real) for p in all_projectors(block)])
