"""
spin_algebra.py - angular-momentum machinery for photon-number blocks.

A block of alpha photons in the a modes and beta photons in the b modes is a
pair of spins j_a = alpha/2, j_b = beta/2. Fock states |a_h, a_v> map onto
|j, m> with j = (a_h + a_v)/2 and m = (a_h - a_v)/2.

Half-integers are carried as doubled integers (two_j = 2j) everywhere
internally. Public functions accept ordinary numbers (0.5, 1, Fraction(3, 2))
and convert at the boundary.

Product basis ordering for a block (alpha, beta):
    index = a_h * (beta + 1) + b_h
so m_a and m_b both run from -j to +j, with the a side major.
"""

#####################################
# Import Modules
#####################################

# Import packages from Python Standard Library
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List, Tuple, Union

# Import external packages
import numpy as np
from scipy.special import gammaln

# Import from local modules
from entanglement.errors import SpinDomainError

#####################################
# Constants
#####################################

HalfInteger = Union[int, float, Fraction]

# Largest doubled spin the shared table will serve (spin 12).
DEFAULT_MAX_TWO_J = 24

# Tolerance when converting floats to doubled integers
_HALF_INTEGER_TOL = 1e-9

#####################################
# Half-integer helpers
#####################################


def doubled(value: HalfInteger) -> int:
    """Return 2*value as an int, or raise if value is not a half-integer."""
    twice = 2 * value
    rounded = int(round(float(twice)))
    if abs(float(twice) - rounded) > _HALF_INTEGER_TOL:
        raise SpinDomainError(f"{value} is not a half-integer.")
    return rounded


def _check_label(two_j: int, two_m: int) -> None:
    if two_j < 0:
        raise SpinDomainError(f"Spin j={two_j / 2} is negative.")
    if abs(two_m) > two_j:
        raise SpinDomainError(f"|m|={abs(two_m) / 2} exceeds j={two_j / 2}.")
    if (two_j - two_m) % 2 != 0:
        raise SpinDomainError(
            f"j={two_j / 2} and m={two_m / 2} have mismatched parity."
        )


#####################################
# Domain Types
#####################################


@dataclass(frozen=True)
class SpinLabel:
    """A spin state label |j, m>, stored as doubled integers."""

    two_j: int
    two_m: int

    def __post_init__(self):
        _check_label(self.two_j, self.two_m)

    @classmethod
    def of(cls, j: HalfInteger, m: HalfInteger) -> "SpinLabel":
        return cls(doubled(j), doubled(m))

    @property
    def j(self) -> float:
        return self.two_j / 2

    @property
    def m(self) -> float:
        return self.two_m / 2


@dataclass(frozen=True)
class BlockLabel:
    """Photon-number pair (alpha, beta) naming an invariant subspace."""

    alpha: int
    beta: int

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise SpinDomainError(
                f"Photon numbers must be non-negative, got ({self.alpha},{self.beta})."
            )

    @property
    def j_a(self) -> float:
        return self.alpha / 2

    @property
    def j_b(self) -> float:
        return self.beta / 2

    @property
    def dim(self) -> int:
        """Dimension of the product space, (alpha+1)(beta+1)."""
        return (self.alpha + 1) * (self.beta + 1)

    @property
    def two_spins(self) -> List[int]:
        """Allowed doubled total spins, |alpha-beta| .. alpha+beta in steps of 2."""
        return list(range(abs(self.alpha - self.beta), self.alpha + self.beta + 1, 2))

    @property
    def spins(self) -> List[float]:
        return [two_j / 2 for two_j in self.two_spins]

    @property
    def n_spins(self) -> int:
        """Number of total-spin sectors, min(alpha, beta) + 1."""
        return min(self.alpha, self.beta) + 1

    def product_basis(self) -> List[Tuple[int, int]]:
        """Doubled (m_a, m_b) labels in product-basis order."""
        return [
            (2 * a_h - self.alpha, 2 * b_h - self.beta)
            for a_h in range(self.alpha + 1)
            for b_h in range(self.beta + 1)
        ]

    def index(self, a_h: int, b_h: int) -> int:
        """Product-basis index of the Fock state with a_h and b_h horizontal photons."""
        return a_h * (self.beta + 1) + b_h

    def __str__(self) -> str:
        return f"({self.alpha},{self.beta})"


@dataclass(frozen=True)
class ProjectorMatrix:
    """Projector onto total spin j inside a block, in the product basis."""

    block: BlockLabel
    two_j: int
    entries: np.ndarray = field(repr=False, compare=False)

    @property
    def j(self) -> float:
        return self.two_j / 2

    @property
    def multiplicity(self) -> int:
        return self.two_j + 1

    def normalized(self) -> np.ndarray:
        """Omega_j = Pi_j / (2j + 1), the unit-trace state on the spin-j sector."""
        return self.entries / self.multiplicity


#####################################
# Clebsch-Gordan coefficients
#####################################


def _log_factorial(n: int) -> float:
    return float(gammaln(n + 1))


def _racah(two_j1: int, two_m1: int, two_j2: int, two_m2: int, two_J: int, two_M: int) -> float:
    """Racah closed form in log-factorial arithmetic, Condon-Shortley phase."""
    if two_M != two_m1 + two_m2:
        return 0.0
    if not abs(two_j1 - two_j2) <= two_J <= two_j1 + two_j2:
        return 0.0
    if (two_j1 + two_j2 + two_J) % 2 != 0 or (two_J - two_M) % 2 != 0:
        return 0.0
    if abs(two_M) > two_J:
        return 0.0

    # integer arguments of the factorials
    j1_j2_J = (two_j1 + two_j2 - two_J) // 2
    J_j1_j2 = (two_J + two_j1 - two_j2) // 2
    J_j2_j1 = (two_J - two_j1 + two_j2) // 2
    total = (two_j1 + two_j2 + two_J) // 2
    j1_m1 = (two_j1 - two_m1) // 2
    j1p_m1 = (two_j1 + two_m1) // 2
    j2_m2 = (two_j2 - two_m2) // 2
    j2p_m2 = (two_j2 + two_m2) // 2
    J_M = (two_J - two_M) // 2
    Jp_M = (two_J + two_M) // 2

    log_prefactor = 0.5 * (
        np.log(two_J + 1)
        + _log_factorial(J_j1_j2)
        + _log_factorial(J_j2_j1)
        + _log_factorial(j1_j2_J)
        - _log_factorial(total + 1)
        + _log_factorial(Jp_M)
        + _log_factorial(J_M)
        + _log_factorial(j1_m1)
        + _log_factorial(j1p_m1)
        + _log_factorial(j2_m2)
        + _log_factorial(j2p_m2)
    )

    # J - j2 + m1 and J - j1 - m2
    shift_a = (two_J - two_j2 + two_m1) // 2
    shift_b = (two_J - two_j1 - two_m2) // 2
    k_min = max(0, -shift_a, -shift_b)
    k_max = min(j1_j2_J, j1_m1, j2p_m2)

    result = 0.0
    for k in range(k_min, k_max + 1):
        log_term = log_prefactor - (
            _log_factorial(k)
            + _log_factorial(j1_j2_J - k)
            + _log_factorial(j1_m1 - k)
            + _log_factorial(j2p_m2 - k)
            + _log_factorial(shift_a + k)
            + _log_factorial(shift_b + k)
        )
        result += (-1.0) ** k * np.exp(log_term)
    return float(result)


class CgTable:
    """
    Write-once cache of Clebsch-Gordan coefficients keyed by doubled labels.

    Entries are computed on first request and never modified afterwards.
    Requests beyond max_two_j raise SpinDomainError.
    """

    def __init__(self, max_two_j: int = DEFAULT_MAX_TWO_J):
        self.max_two_j = max_two_j
        self._coefficients: Dict[Tuple[int, int, int, int, int, int], float] = {}
        self._recoupling: Dict[Tuple[int, int], np.ndarray] = {}

    def __len__(self) -> int:
        return len(self._coefficients)

    def coefficient(
        self, two_j1: int, two_m1: int, two_j2: int, two_m2: int, two_J: int, two_M: int
    ) -> float:
        """<j1 m1; j2 m2 | J M> for doubled labels."""
        _check_label(two_j1, two_m1)
        _check_label(two_j2, two_m2)
        _check_label(two_J, two_M)
        if max(two_j1, two_j2, two_J) > self.max_two_j:
            raise SpinDomainError(
                f"Spin above the table cutoff j={self.max_two_j / 2}."
            )
        key = (two_j1, two_m1, two_j2, two_m2, two_J, two_M)
        if key not in self._coefficients:
            self._coefficients[key] = _racah(*key)
        return self._coefficients[key]

    def recoupling_matrix(self, two_j1: int, two_j2: int) -> np.ndarray:
        """
        Orthogonal matrix from the coupled basis to the product basis.

        Rows follow the product ordering (m1 major, both ascending).
        Columns run over J ascending, then M ascending.
        """
        key = (two_j1, two_j2)
        if key not in self._recoupling:
            two_ms1 = range(-two_j1, two_j1 + 1, 2)
            two_ms2 = range(-two_j2, two_j2 + 1, 2)
            columns = [
                (two_J, two_M)
                for two_J in range(abs(two_j1 - two_j2), two_j1 + two_j2 + 1, 2)
                for two_M in range(-two_J, two_J + 1, 2)
            ]
            matrix = np.zeros(((two_j1 + 1) * (two_j2 + 1), len(columns)))
            for row, (two_m1, two_m2) in enumerate(
                (m1, m2) for m1 in two_ms1 for m2 in two_ms2
            ):
                for col, (two_J, two_M) in enumerate(columns):
                    if two_M == two_m1 + two_m2:
                        matrix[row, col] = self.coefficient(
                            two_j1, two_m1, two_j2, two_m2, two_J, two_M
                        )
            matrix.setflags(write=False)
            self._recoupling[key] = matrix
        return self._recoupling[key]


# Shared table used by the module-level functions
CG_TABLE = CgTable()


def clebsch_gordan(
    j1: HalfInteger,
    m1: HalfInteger,
    j2: HalfInteger,
    m2: HalfInteger,
    J: HalfInteger,
    M: HalfInteger,
) -> float:
    """
    Condon-Shortley Clebsch-Gordan coefficient <j1 m1; j2 m2 | J M>.

    Returns 0 when M != m1 + m2 or J violates the triangle rule.
    Raises SpinDomainError for malformed labels (|m| > j, parity mismatch).
    """
    return CG_TABLE.coefficient(
        doubled(j1), doubled(m1), doubled(j2), doubled(m2), doubled(J), doubled(M)
    )


#####################################
# Fock <-> spin relabeling
#####################################


def fock_to_spin(n_h: int, n_v: int) -> SpinLabel:
    """Map occupations (n_h, n_v) to |j, m> with j=(n_h+n_v)/2, m=(n_h-n_v)/2."""
    if n_h < 0 or n_v < 0:
        raise SpinDomainError(f"Occupations must be non-negative, got ({n_h},{n_v}).")
    return SpinLabel(n_h + n_v, n_h - n_v)


def spin_to_fock(label: SpinLabel) -> Tuple[int, int]:
    """Inverse of fock_to_spin."""
    return (label.two_j + label.two_m) // 2, (label.two_j - label.two_m) // 2


#####################################
# Total-spin projectors
#####################################


@lru_cache(maxsize=None)
def _projector_entries(alpha: int, beta: int, two_j: int) -> np.ndarray:
    recoupling = CG_TABLE.recoupling_matrix(alpha, beta)
    # columns of the spin-j sector
    start = sum(two_J + 1 for two_J in range(abs(alpha - beta), two_j, 2))
    sector = recoupling[:, start : start + two_j + 1]
    entries = sector @ sector.T
    entries.setflags(write=False)
    return entries


def total_spin_projector(block: BlockLabel, j: HalfInteger) -> ProjectorMatrix:
    """
    Projector Pi_j = sum_M |j,M><j,M| on block (alpha, beta), in the product basis.

    Raises SpinDomainError when j lies outside |j_a - j_b| .. j_a + j_b.
    """
    two_j = doubled(j)
    if two_j not in block.two_spins:
        raise SpinDomainError(
            f"Total spin j={two_j / 2} is not allowed in block {block}."
        )
    return ProjectorMatrix(block, two_j, _projector_entries(block.alpha, block.beta, two_j))


def all_projectors(block: BlockLabel) -> List[ProjectorMatrix]:
    """Projectors for every allowed total spin of the block, j ascending."""
    return [total_spin_projector(block, two_j / 2) for two_j in block.two_spins]
