"""
fig_datasets.py - datasets for the entanglement curves and the block trajectories.

run_fig2 and run_sweep emit one row per (N, eta) grid point with the total
relative entropy of entanglement (bits) and its per-block contributions.
run_fig1 emits mu trajectories of the (alpha, alpha) blocks as functions of
xi, together with their PPT margins and the polytope vertices.

Grid points are independent; with --workers > 1 they run in a process pool
and are collected in grid order.
"""

#####################################
# Import Modules
#####################################

# Import packages from Python Standard Library
import concurrent.futures
import json
import pathlib
from typing import Callable, Dict, Iterable, List, Sequence, Tuple, TypeVar

# Import external packages
import numpy as np
import pandas as pd

# Import functions from local modules
from entanglement.block_decomposition import block_state_at_xi
from entanglement.entropy_solver import TotalEntropy, total_relative_entropy
from entanglement.errors import SolverError
from entanglement.ppt_geometry import is_ppt, ppt_constraints
from entanglement.spin_algebra import BlockLabel
from runs.run_config import RunConfig
from utils.utils_logger import logger
from utils.utils_output import sibling_path, write_document, write_table

#####################################
# Constants
#####################################

FIG1_BLOCKS = (BlockLabel(1, 1), BlockLabel(2, 2), BlockLabel(3, 3))
LEADING_COLUMNS = ["eta", "xi", "N", "cutoff", "mass_captured", "E_R_total"]

T = TypeVar("T")
R = TypeVar("R")

#####################################
# Worker pool
#####################################


def parallel_map(function: Callable[[T], R], items: Sequence[T], workers: int) -> List[R]:
    """Map over items, in a process pool when workers > 1; results keep item order."""
    if workers <= 1 or len(items) <= 1:
        return [function(item) for item in items]
    with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as executor:
        futures = [executor.submit(function, item) for item in items]
        return [f.result() for f in futures]


def _solve_point(task: Tuple[RunConfig, float, float]) -> TotalEntropy:
    config, eta, tau = task
    return total_relative_entropy(
        config.model_params(eta, tau), kkt_tol=config.kkt_tol, residual_tol=config.residual_tol
    )


#####################################
# Entropy curves
#####################################


def block_column(block: BlockLabel) -> str:
    return f"E_R({block.alpha},{block.beta})"


def entropy_row(total: TotalEntropy, photons: float) -> Dict[str, float]:
    """One dataset row: leading columns, then weighted block terms in lexicographic order."""
    params = total.params
    row = {
        "eta": params.eta,
        "xi": params.xi,
        "N": photons,
        "cutoff": max(total.cutoff),
        "mass_captured": total.captured_mass,
        "E_R_total": total.e_r_total,
    }
    for contribution in sorted(total.blocks, key=lambda c: (c.block.alpha, c.block.beta)):
        row[block_column(contribution.block)] = contribution.weighted
    return row


def entropy_curves(config: RunConfig) -> Tuple[pd.DataFrame, int]:
    """Total E_R over every (N, eta) pair of the config, N major, and the count of uncertified points."""
    tasks = [(config, eta, tau) for _, tau in config.source_points() for eta in config.etas]
    logger.info(
        f"Solving {len(tasks)} grid points "
        f"(cutoff {config.alpha_max},{config.beta_max}, workers {config.workers})."
    )
    totals = parallel_map(_solve_point, tasks, config.workers)

    rows = []
    for (photons, _), chunk in zip(config.source_points(), _chunks(totals, len(config.etas))):
        for total in chunk:
            rows.append(entropy_row(total, photons))
        logger.info(
            f"N={photons:g}: E_R from {chunk[0].e_r_total:.6f} to {chunk[-1].e_r_total:.6f} bits."
        )
    uncertified = sum(not total.certified for total in totals)
    return pd.DataFrame(rows), uncertified


def require_certified(uncertified: int, path: pathlib.Path) -> None:
    """Fail a run whose written output holds points without a KKT certificate."""
    if uncertified:
        logger.error(f"{uncertified} points in {path} have a KKT residual above tolerance.")
        raise SolverError(f"{uncertified} points in {path} are not KKT-certified.")


def _chunks(items: List[T], size: int) -> Iterable[List[T]]:
    for start in range(0, len(items), size):
        yield items[start:start + size]


def run_fig2(config: RunConfig) -> pathlib.Path:
    """Entanglement against transmittivity for each initial photon number."""
    logger.info(f"START fig2 for N in {config.photon_numbers}.")
    table, uncertified = entropy_curves(config)
    path = write_table(table, config.output_path, config.fmt)
    require_certified(uncertified, path)
    logger.info("END fig2.")
    return path


def run_sweep(config: RunConfig) -> pathlib.Path:
    """Same dataset as fig2 for the user-supplied source parameters."""
    logger.info(f"START sweep over {len(config.etas)} eta values.")
    table, uncertified = entropy_curves(config)
    path = write_table(table, config.output_path, config.fmt)
    require_certified(uncertified, path)
    logger.info("END sweep.")
    return path


#####################################
# Block trajectories
#####################################


def trajectory_table(config: RunConfig, blocks: Sequence[BlockLabel] = FIG1_BLOCKS) -> pd.DataFrame:
    """mu_j(xi) of each block with its PPT margin; unused mu columns stay empty."""
    width = max(block.n_spins for block in blocks)
    rows = []
    for block in blocks:
        polytope = ppt_constraints(block)
        for xi_value in config.xis:
            state = block_state_at_xi(block, xi_value, config.series_eps, config.residual_tol)
            check = is_ppt(state, polytope)
            row = {"alpha": block.alpha, "beta": block.beta, "xi": xi_value}
            for j in range(width):
                row[f"mu_{j}"] = float(state.mu[j]) if j < block.n_spins else np.nan
            row["margin"] = check.margin
            row["is_ppt"] = check.is_ppt
            rows.append(row)
        logger.info(f"Block {block}: {len(config.xis)} trajectory points.")
    return pd.DataFrame(rows)


def polytope_document(blocks: Sequence[BlockLabel]) -> dict:
    return {"polytopes": [ppt_constraints(block).to_dict() for block in blocks]}


def _json_records(table: pd.DataFrame) -> List[dict]:
    """Table rows as plain JSON values, NaN turned into null."""
    return json.loads(table.to_json(orient="records", double_precision=15))


def run_fig1(config: RunConfig) -> pathlib.Path:
    """
    mu trajectories of blocks (1,1), (2,2), (3,3) over the xi grid, plus vertex lists.

    CSV output writes the trajectories and a sibling *_polytopes.json; JSON
    output writes one document holding both.
    """
    logger.info(f"START fig1 over {len(config.xis)} xi values.")
    table = trajectory_table(config)
    document = polytope_document(FIG1_BLOCKS)
    entered = table[table["is_ppt"]]
    if not entered.empty:
        logger.warning(f"{len(entered)} trajectory points lie inside the PPT polytope.")

    if config.fmt == "csv":
        path = write_table(table, config.output_path, "csv")
        write_document(document, sibling_path(path, "polytopes", ".json"))
    else:
        document["trajectories"] = _json_records(table)
        path = write_document(document, config.output_path)
    logger.info("END fig1.")
    return path
