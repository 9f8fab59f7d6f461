"""
pdc_probability.py - photon-counting distribution of the lossy down-conversion state.

Before loss the phase-averaged state is a mixture over pair numbers with
weights (n+1) tanh^{2n}(tau) / cosh^4(tau). Every mode then passes a beam
splitter of transmittivity eta. The probability to detect
(a_h, a_v, b_h, b_v) photons is

    p = (eta t)^(alpha+beta) / (cosh^4 tau  a_h! a_v! b_h! b_v!)
        * sum_{m >= m0, n >= n0} xi^(2(m+n) - alpha - beta)
              (m!)^2 (n!)^2 / ((m-a_h)! (m-b_v)! (n-a_v)! (n-b_h)!)

with t = tanh(tau), xi = (1 - eta) t, m0 = max(a_h, b_v), n0 = max(a_v, b_h).
Written this way the prefactor is finite at eta = 1 and the series carries
all of the xi dependence.

The "typeset" variant keeps the prefactor eta^(alpha+beta) (1-eta)^(alpha+beta)
and serves as a negative control for the oracle check.
"""

#####################################
# Import Modules
#####################################

# Import packages from Python Standard Library
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Literal, Tuple

# Import external packages
import numpy as np
from scipy.special import gammaln, xlogy

# Import from local modules
from entanglement.errors import SeriesDivergenceError, SpinDomainError
from entanglement.spin_algebra import BlockLabel

#####################################
# Defaults
#####################################

DEFAULT_SERIES_EPS = 1e-14
DEFAULT_CUTOFF = 5

# Initial number of terms per factor series, doubled until converged
_INITIAL_TERMS = 32
_MAX_TERMS = 1 << 20

ProbabilityVariant = Literal["derived", "typeset"]

#####################################
# Domain Types
#####################################


@dataclass(frozen=True)
class ModelParams:
    """Loss and source parameters plus numerical settings."""

    eta: float
    tau: float
    series_eps: float = DEFAULT_SERIES_EPS
    alpha_max: int = DEFAULT_CUTOFF
    beta_max: int = DEFAULT_CUTOFF
    variant: ProbabilityVariant = "derived"

    def __post_init__(self):
        if not 0.0 <= self.eta <= 1.0:
            raise SpinDomainError(f"Transmittivity eta={self.eta} outside [0, 1].")
        if self.tau < 0.0:
            raise SpinDomainError(f"Interaction time tau={self.tau} is negative.")
        if self.series_eps <= 0.0:
            raise SpinDomainError("series_eps must be positive.")
        if self.alpha_max < 0 or self.beta_max < 0:
            raise SpinDomainError("Block cutoffs must be non-negative.")
        if self.variant not in ("derived", "typeset"):
            raise SpinDomainError(f"Unknown probability variant '{self.variant}'.")

    @classmethod
    def from_photon_number(cls, photons: float, eta: float, **kwargs) -> "ModelParams":
        """Build params from the average photon number before loss, N = 2 sinh^2(tau)."""
        if photons < 0:
            raise SpinDomainError(f"Average photon number {photons} is negative.")
        return cls(eta=eta, tau=math.asinh(math.sqrt(photons / 2.0)), **kwargs)

    @property
    def tanh_tau(self) -> float:
        return math.tanh(self.tau)

    @property
    def xi(self) -> float:
        return xi(self)

    @property
    def photon_number(self) -> float:
        """Average photon number before loss, N = 2 sinh^2(tau)."""
        return 2.0 * math.sinh(self.tau) ** 2

    @property
    def photon_number_after_loss(self) -> float:
        """Average photon number after loss, n = eta N."""
        return self.eta * self.photon_number


@dataclass(frozen=True)
class FockCount:
    """Detected occupations of the four modes a_h, a_v, b_h, b_v."""

    a_h: int
    a_v: int
    b_h: int
    b_v: int

    def __post_init__(self):
        if min(self.a_h, self.a_v, self.b_h, self.b_v) < 0:
            raise SpinDomainError(f"Negative photon count in {self}.")

    @property
    def alpha(self) -> int:
        return self.a_h + self.a_v

    @property
    def beta(self) -> int:
        return self.b_h + self.b_v

    @property
    def block(self) -> BlockLabel:
        return BlockLabel(self.alpha, self.beta)


def block_counts(block: BlockLabel) -> Iterator[FockCount]:
    """FockCounts of a block in product-basis order (a_h major, then b_h)."""
    for a_h in range(block.alpha + 1):
        for b_h in range(block.beta + 1):
            yield FockCount(a_h, block.alpha - a_h, b_h, block.beta - b_h)


#####################################
# Parameters
#####################################


def xi(params: ModelParams) -> float:
    """Effective loss parameter (1 - eta) tanh(tau)."""
    return (1.0 - params.eta) * math.tanh(params.tau)


def photons_to_tau(photons: float) -> float:
    """Interaction time for average photon number N before loss."""
    return math.asinh(math.sqrt(photons / 2.0))


#####################################
# Series evaluation
#####################################


def _log_factor_series(k1: int, k2: int, xi_value: float, terms: int) -> np.ndarray:
    """
    log of xi^(2m-k1-k2) (m!)^2 / ((m-k1)! (m-k2)!) for m = max(k1,k2) .. +terms-1.

    One factor of the double series: the (a_h, b_v) or the (a_v, b_h) squeezer.
    """
    m = np.arange(max(k1, k2), max(k1, k2) + terms)
    return (
        xlogy(2 * m - k1 - k2, xi_value)
        + 2.0 * gammaln(m + 1)
        - gammaln(m - k1 + 1)
        - gammaln(m - k2 + 1)
    )


def _ratio_bound(k1: int, k2: int, xi_value: float, m_last: int) -> float:
    """Ratio of consecutive terms just past m_last; decreases towards xi^2."""
    m = m_last + 1
    return xi_value**2 * m * m / ((m - k1) * (m - k2))


def _scaled(log_values: np.ndarray) -> Tuple[np.ndarray, float]:
    """Exponentiate after shifting by the largest finite log value."""
    finite = log_values[np.isfinite(log_values)]
    if finite.size == 0:
        return np.zeros_like(log_values), 0.0
    shift = float(finite.max())
    return np.exp(log_values - shift), shift


def _log_double_series(count: FockCount, xi_value: float, series_eps: float) -> float:
    """
    Natural log of the double series, truncated by anti-diagonals m+n = const.

    The terms factor as g(m) h(n), so each anti-diagonal is a convolution of
    the two factor sequences. Truncation stops once the last complete
    anti-diagonal is below series_eps times the running sum, the diagonals
    are decreasing, and both factor ratios have dropped below one.
    """
    if xi_value >= 1.0:
        raise SeriesDivergenceError(f"Series diverges for xi={xi_value} >= 1.")

    k_h = (count.a_h, count.b_v)
    k_v = (count.a_v, count.b_h)
    terms = _INITIAL_TERMS
    while terms <= _MAX_TERMS:
        g, shift_g = _scaled(_log_factor_series(*k_h, xi_value, terms))
        h, shift_h = _scaled(_log_factor_series(*k_v, xi_value, terms))
        # anti-diagonals 0 .. terms-1 are complete
        diagonals = np.convolve(g, h)[:terms]
        total = float(diagonals.sum())
        if total == 0.0:
            return -math.inf
        if xi_value == 0.0:
            return math.log(total) + shift_g + shift_h

        m_last = max(k_h) + terms - 1
        n_last = max(k_v) + terms - 1
        settled = (
            diagonals[-1] <= series_eps * total
            and diagonals[-1] <= diagonals[-2]
            and _ratio_bound(*k_h, xi_value, m_last) < 1.0
            and _ratio_bound(*k_v, xi_value, n_last) < 1.0
        )
        if settled:
            return math.log(total) + shift_g + shift_h
        terms *= 2

    raise SeriesDivergenceError(
        f"Series for {count} did not settle within {_MAX_TERMS} terms at xi={xi_value}."
    )


def _log_prefactor(count: FockCount, params: ModelParams) -> float:
    photons = count.alpha + count.beta
    log_denominator = 4.0 * math.log(math.cosh(params.tau)) + sum(
        math.lgamma(k + 1) for k in (count.a_h, count.a_v, count.b_h, count.b_v)
    )
    if params.variant == "typeset":
        # eta^(alpha+beta) (1-eta)^(alpha+beta), series in ((1-eta) t)^(2(m+n))
        return (
            float(xlogy(photons, params.eta))
            + float(xlogy(photons, 1.0 - params.eta))
            + float(xlogy(photons, params.xi))
            - log_denominator
        )
    return float(xlogy(photons, params.eta * params.tanh_tau)) - log_denominator


#####################################
# Public operations
#####################################


@lru_cache(maxsize=65536)
def joint_count_probability(count: FockCount, params: ModelParams) -> float:
    """
    Probability of detecting `count` after loss.

    Raises SeriesDivergenceError when xi >= 1.
    """
    xi_value = params.xi
    if xi_value >= 1.0:
        raise SeriesDivergenceError(f"Series diverges for xi={xi_value} >= 1.")
    log_prefactor = _log_prefactor(count, params)
    if log_prefactor == -math.inf:
        return 0.0
    log_series = _log_double_series(count, xi_value, params.series_eps)
    if log_series == -math.inf:
        return 0.0
    return min(1.0, math.exp(log_prefactor + log_series))


def block_probability(alpha: int, beta: int, params: ModelParams) -> float:
    """P(alpha, beta): sum of p over the (alpha+1)(beta+1) compatible counts."""
    block = BlockLabel(alpha, beta)
    return math.fsum(joint_count_probability(c, params) for c in block_counts(block))


def relative_count_weights(block: BlockLabel, xi_value: float, series_eps: float = DEFAULT_SERIES_EPS) -> np.ndarray:
    """
    Unnormalized count weights of a block as a function of xi alone.

    The (eta t)^(alpha+beta) / cosh^4 prefactor is common to the whole block,
    so the normalized populations depend on (eta, tau) only through xi.
    Entries are in product-basis order and scaled so the largest is one.
    """
    logs = []
    for count in block_counts(block):
        log_denominator = sum(
            math.lgamma(k + 1) for k in (count.a_h, count.a_v, count.b_h, count.b_v)
        )
        logs.append(_log_double_series(count, xi_value, series_eps) - log_denominator)
    weights, _ = _scaled(np.asarray(logs))
    return weights


def pair_marginal_probability(alpha: int, beta: int, params: ModelParams) -> float:
    """
    P(alpha, beta) from the pair-number marginal.

    n pairs put n photons on each side; each side keeps Bin(n, eta) of them:
        sum_n (n+1) t^(2n)/cosh^4 C(n,alpha) C(n,beta) eta^(alpha+beta) (1-eta)^(2n-alpha-beta)
    """
    if params.xi >= 1.0:
        raise SeriesDivergenceError(f"Series diverges for xi={params.xi} >= 1.")
    t2 = params.tanh_tau**2
    n0 = max(alpha, beta)
    log_pre = (
        float(xlogy(alpha + beta, params.eta)) - 4.0 * math.log(math.cosh(params.tau))
    )
    if log_pre == -math.inf:
        return 0.0

    terms = _INITIAL_TERMS
    while terms <= _MAX_TERMS:
        n = np.arange(n0, n0 + terms)
        logs = (
            np.log(n + 1)
            + xlogy(n, t2)
            + gammaln(n + 1) - gammaln(alpha + 1) - gammaln(n - alpha + 1)
            + gammaln(n + 1) - gammaln(beta + 1) - gammaln(n - beta + 1)
            + xlogy(2 * n - alpha - beta, 1.0 - params.eta)
        )
        values, shift = _scaled(logs)
        total = float(values.sum())
        if total == 0.0:
            return 0.0
        if values[-1] <= params.series_eps * total or params.xi == 0.0:
            return min(1.0, math.exp(math.log(total) + shift + log_pre))
        terms *= 2
    raise SeriesDivergenceError(f"Marginal series for ({alpha},{beta}) did not settle.")


def pair_tail_bound(tau: float, pairs: int) -> float:
    """
    Probability of more than `pairs` pairs before loss, in closed form.

    (1/cosh^4) sum_{n > pairs} (n+1) x^n = x^(pairs+1) ((pairs+2) - (pairs+1) x)
    with x = tanh^2(tau). Loss only removes photons, so this also bounds the
    mass outside alpha, beta <= pairs after loss.
    """
    x = math.tanh(tau) ** 2
    return x ** (pairs + 1) * ((pairs + 2) - (pairs + 1) * x)


def captured_mass(params: ModelParams, alpha_max: int = None, beta_max: int = None) -> float:
    """Sum of P(alpha, beta) over the blocks inside the cutoff."""
    alpha_max = params.alpha_max if alpha_max is None else alpha_max
    beta_max = params.beta_max if beta_max is None else beta_max
    return math.fsum(
        pair_marginal_probability(alpha, beta, params)
        for alpha in range(alpha_max + 1)
        for beta in range(beta_max + 1)
    )


def mu_zero_closed_form(xi_value: float) -> float:
    """Singlet weight of the (1,1) block, (1 + xi^2/2) / (1 + 2 xi^2)."""
    x2 = xi_value * xi_value
    return (1.0 + x2 / 2.0) / (1.0 + 2.0 * x2)
