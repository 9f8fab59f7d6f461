"""
cli.py - command-line entry point.

Usage:
    python -m runs.cli fig2
    python -m runs.cli sweep --photons 1 --eta-grid 0:1:21 --workers 4
    python -m runs.cli entropy --eta 0.5 --tau 1.0 --format json
    python -m runs.cli oracle-check [--corrupt-prefactor]

Exit codes: 0 success, 1 invalid configuration or I/O failure,
2 numerical-check failure.
"""

#####################################
# Import Modules
#####################################

# Import packages from Python Standard Library
import pathlib
import sys
from typing import Callable, Dict, List, Optional, Sequence

# Import external packages
import numpy as np
import pandas as pd

# Import functions from local modules
from entanglement.block_decomposition import block_state
from entanglement.entropy_solver import total_relative_entropy
from entanglement.errors import EmptyBlockError, EntanglementError
from entanglement.pdc_probability import block_counts, block_probability, joint_count_probability
from entanglement.ppt_geometry import ppt_constraints
from entanglement.spin_algebra import BlockLabel
from runs.fig_datasets import require_certified, run_fig1, run_fig2, run_sweep
from runs.oracle_check import run_oracle_check
from runs.run_config import ConfigError, RunConfig, build_parser, config_from_args
from utils.utils_logger import get_log_file_path, logger, set_console_level
from utils.utils_output import write_document, write_table

#####################################
# Exit codes
#####################################

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_CHECK_FAILED = 2

#####################################
# Single-point modes
#####################################


def _grid_points(config: RunConfig):
    for photons, tau in config.source_points():
        for eta in config.etas:
            yield photons, config.model_params(eta, tau)


def _blocks(config: RunConfig) -> List[BlockLabel]:
    return [
        BlockLabel(alpha, beta)
        for alpha in range(config.alpha_max + 1)
        for beta in range(config.beta_max + 1)
    ]


def run_probs(config: RunConfig) -> pathlib.Path:
    """Joint count probabilities of every outcome inside the cutoff."""
    rows = []
    for photons, params in _grid_points(config):
        for block in _blocks(config):
            for count in block_counts(block):
                rows.append(
                    {
                        "eta": params.eta,
                        "tau": params.tau,
                        "N": photons,
                        "a_h": count.a_h,
                        "a_v": count.a_v,
                        "b_h": count.b_h,
                        "b_v": count.b_v,
                        "alpha": count.alpha,
                        "beta": count.beta,
                        "probability": joint_count_probability(count, params),
                    }
                )
    return write_table(pd.DataFrame(rows), config.output_path, config.fmt)


def run_mu(config: RunConfig) -> pathlib.Path:
    """mu of every populated block inside the cutoff; empty blocks are skipped."""
    width = min(config.alpha_max, config.beta_max) + 1
    rows = []
    for photons, params in _grid_points(config):
        for block in _blocks(config):
            try:
                state = block_state(block, params, config.residual_tol)
            except EmptyBlockError:
                logger.debug(f"eta={params.eta:g}: block {block} is empty.")
                continue
            row = {
                "eta": params.eta,
                "tau": params.tau,
                "N": photons,
                "xi": params.xi,
                "alpha": block.alpha,
                "beta": block.beta,
                "probability": block_probability(block.alpha, block.beta, params),
            }
            for j in range(width):
                row[f"mu_{j}"] = float(state.mu[j]) if j < block.n_spins else float("nan")
            row["residual"] = state.residual
            rows.append(row)
    return write_table(pd.DataFrame(rows), config.output_path, config.fmt)


def run_polytope(config: RunConfig) -> pathlib.Path:
    """PPT polytopes of every block inside the cutoff, always as JSON."""
    document = {"polytopes": [ppt_constraints(block).to_dict() for block in _blocks(config)]}
    path = config.output_path
    if path.suffix != ".json":
        logger.info("Polytopes are nested data; writing JSON.")
        path = path.with_suffix(".json")
    return write_document(document, path)


def run_entropy(config: RunConfig) -> pathlib.Path:
    """Per-block breakdown of the total relative entropy at each (eta, tau)."""
    rows = []
    uncertified = 0
    for photons, params in _grid_points(config):
        total = total_relative_entropy(params, kkt_tol=config.kkt_tol, residual_tol=config.residual_tol)
        logger.info(
            f"eta={params.eta:g} N={photons:g}: E_R={total.e_r_total:.10f} bits "
            f"(mass captured {total.captured_mass:.10f})"
        )
        uncertified += not total.certified
        for contribution in total.blocks:
            result = contribution.result
            rows.append(
                {
                    "eta": params.eta,
                    "tau": params.tau,
                    "N": photons,
                    "alpha": contribution.block.alpha,
                    "beta": contribution.block.beta,
                    "probability": contribution.probability,
                    "E_R_block": float("nan") if result is None else result.e_r,
                    "weighted": contribution.weighted,
                    "kkt_residual": float("nan") if result is None else result.kkt_residual,
                    "certified": result is None or result.certified,
                }
            )
    path = write_table(pd.DataFrame(rows), config.output_path, config.fmt)
    require_certified(uncertified, path)
    return path


MODE_RUNNERS: Dict[str, Callable[[RunConfig], pathlib.Path]] = {
    "probs": run_probs,
    "mu": run_mu,
    "polytope": run_polytope,
    "entropy": run_entropy,
    "sweep": run_sweep,
    "fig1": run_fig1,
    "fig2": run_fig2,
}

#####################################
# Define main function for this module.
#####################################


def run(config: RunConfig) -> int:
    """Execute one configured mode and return its exit code."""
    if config.mode == "oracle-check":
        _, passed = run_oracle_check(config)
        return EXIT_OK if passed else EXIT_CHECK_FAILED
    MODE_RUNNERS[config.mode](config)
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Parse flags, run the mode and map failures to exit codes."""
    args = build_parser().parse_args(argv)
    try:
        set_console_level(args.log_level)
        config = config_from_args(args)
    except (ConfigError, ValueError) as e:
        logger.error(f"Invalid configuration: {e}")
        return EXIT_CONFIG

    logger.info(f"START {config.mode}.")
    try:
        code = run(config)
    except ConfigError as e:
        logger.error(f"Invalid configuration: {e}")
        return EXIT_CONFIG
    except OSError as e:
        logger.error(f"I/O failure: {e}")
        return EXIT_CONFIG
    except EntanglementError as e:
        logger.error(f"Numerical failure in {config.mode}: {e}")
        return EXIT_CHECK_FAILED
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as e:
        # raised from numpy or scipy below the solver
        logger.exception(f"Numerical failure in {config.mode}: {e}")
        return EXIT_CHECK_FAILED
    logger.info(f"END {config.mode} with exit code {code}. Log file: {get_log_file_path()}")
    return code


if __name__ == "__main__":
    sys.exit(main())
