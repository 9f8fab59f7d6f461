"""
oracle_check.py - dual-path equivalence suite.

For each (eta, tau) the truncated Fock-space oracle (explicit source state,
explicit Kraus loss) is compared with the analytic pipeline:

- probability: every joint count with alpha + beta <= 4
- mu: extract_mu against measure_mu on populated blocks
- symmetry_source / symmetry_lossy: V(U) rho V(U)^dagger = rho for Haar U
- kraus_completeness: sum_k L_k^dagger L_k = 1

Each check reports its worst deviation; the run passes only if all do.
"""

#####################################
# Import Modules
#####################################

# Import packages from Python Standard Library
import pathlib
from dataclasses import asdict, dataclass
from typing import List, Tuple

# Import external packages
import numpy as np
import pandas as pd

# Import functions from local modules
from entanglement.block_decomposition import block_state
from entanglement.oracle_sim import (
    TruncatedState,
    apply_loss,
    build_pdc_state,
    check_symmetry,
    extract_block,
    kraus_completeness_defect,
    lossy_pair_cutoff,
    measure_mu,
)
from entanglement.pdc_probability import ModelParams, block_counts, joint_count_probability
from entanglement.spin_algebra import BlockLabel
from runs.run_config import RunConfig
from utils.utils_logger import logger
from utils.utils_output import write_table

#####################################
# Constants
#####################################

COMPARED_PHOTONS = 4
POPULATED_TOL = 1e-12

#####################################
# Report
#####################################


@dataclass(frozen=True)
class CheckOutcome:
    check: str
    eta: float
    tau: float
    worst: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(self.worst <= self.tol)

    def as_row(self) -> dict:
        return {**asdict(self), "passed": self.passed}


#####################################
# Comparisons
#####################################


def _compared_blocks() -> List[BlockLabel]:
    return [
        BlockLabel(alpha, beta)
        for alpha in range(COMPARED_PHOTONS + 1)
        for beta in range(COMPARED_PHOTONS + 1 - alpha)
    ]


def probability_deviation(lossy: TruncatedState, params: ModelParams) -> float:
    """Largest |p_analytic - p_oracle| over joint counts with alpha + beta <= 4."""
    worst = 0.0
    for block in _compared_blocks():
        matrix = lossy.blocks.get((block.alpha, block.beta))
        diagonal = np.zeros(block.dim) if matrix is None else np.diag(matrix).real
        for count in block_counts(block):
            oracle = diagonal[block.index(count.a_h, count.b_h)]
            worst = max(worst, abs(joint_count_probability(count, params) - oracle))
    return worst


def mu_deviation(lossy: TruncatedState, params: ModelParams, residual_tol: float) -> float:
    """Largest |mu_analytic - mu_oracle| over blocks with oracle weight above 1e-12."""
    worst = 0.0
    for block in _compared_blocks():
        matrix = lossy.blocks.get((block.alpha, block.beta))
        if matrix is None or np.trace(matrix).real <= POPULATED_TOL:
            continue
        _, normalized = extract_block(lossy, block)
        measured = measure_mu(normalized, block)
        analytic = block_state(block, params, residual_tol).mu
        worst = max(worst, float(np.max(np.abs(analytic - measured))))
    return worst


def check_point(config: RunConfig, eta: float, tau: float) -> List[CheckOutcome]:
    """Run every comparison at one (eta, tau)."""
    params = config.model_params(eta, tau)
    n_max = lossy_pair_cutoff(tau, eta, COMPARED_PHOTONS, config.truncation_tol)
    source = build_pdc_state(tau, n_max)
    lossy = apply_loss(source, eta, max_photons=COMPARED_PHOTONS)
    logger.info(f"eta={eta:g} tau={tau:g}: n_max={n_max}, unconditioned tail {source.truncation_error:.1e}")

    outcomes = [
        CheckOutcome("probability", eta, tau, probability_deviation(lossy, params), config.oracle_tol),
        CheckOutcome("mu", eta, tau, mu_deviation(lossy, params, config.residual_tol), config.oracle_tol),
        CheckOutcome(
            "symmetry_source",
            eta,
            tau,
            check_symmetry(source, config.u_samples, config.seed, max_photons=2 * COMPARED_PHOTONS),
            config.symmetry_tol,
        ),
        CheckOutcome(
            "symmetry_lossy",
            eta,
            tau,
            check_symmetry(lossy, config.u_samples, config.seed, max_photons=COMPARED_PHOTONS),
            config.symmetry_tol,
        ),
        CheckOutcome("kraus_completeness", eta, tau, kraus_completeness_defect(eta, n_max), config.oracle_tol),
    ]
    for outcome in outcomes:
        if not outcome.passed:
            logger.error(
                f"{outcome.check} failed at eta={eta:g} tau={tau:g}: "
                f"{outcome.worst:.3e} > {outcome.tol:.0e}"
            )
        elif outcome.worst > 0.1 * outcome.tol:
            logger.warning(f"{outcome.check} near tolerance: {outcome.worst:.3e}")
    return outcomes


def oracle_report(config: RunConfig) -> Tuple[pd.DataFrame, bool]:
    """Report table (check, eta, tau, worst, tol, passed) and the overall verdict."""
    if config.corrupt_prefactor:
        logger.warning("Using the typeset prefactor: the probability check is expected to fail.")
    outcomes = [
        outcome
        for tau in config.taus
        for eta in config.etas
        for outcome in check_point(config, eta, tau)
    ]
    report = pd.DataFrame([outcome.as_row() for outcome in outcomes])
    return report, all(outcome.passed for outcome in outcomes)


def run_oracle_check(config: RunConfig) -> Tuple[pathlib.Path, bool]:
    """Write the report; the caller turns a failed verdict into exit code 2."""
    logger.info(f"START oracle-check over {len(config.etas)} x {len(config.taus)} points.")
    report, passed = oracle_report(config)
    path = write_table(report, config.output_path, config.fmt)
    logger.info(f"END oracle-check: {'PASSED' if passed else 'FAILED'}.")
    return path, passed
