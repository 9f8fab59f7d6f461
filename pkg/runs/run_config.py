"""
run_config.py - command-line flags and the validated RunConfig they build.

Configuration comes only from flags. Every tolerance flag defaults to the
value the library module uses.
"""

#####################################
# Import Modules
#####################################

# Import packages from Python Standard Library
import argparse
import math
import pathlib
from dataclasses import dataclass
from typing import Optional, Tuple

# Import external packages
import numpy as np

# Import functions from local modules
from entanglement.block_decomposition import DEFAULT_RESIDUAL_TOL
from entanglement.entropy_solver import DEFAULT_KKT_TOL
from entanglement.errors import EntanglementError
from entanglement.oracle_sim import DEFAULT_SEED
from entanglement.pdc_probability import DEFAULT_CUTOFF, DEFAULT_SERIES_EPS, ModelParams, photons_to_tau
from utils.utils_output import OutputFormat, default_output_path

#####################################
# Defaults
#####################################

MODES = ("probs", "mu", "polytope", "entropy", "sweep", "oracle-check", "fig1", "fig2")

DEFAULT_ETA_GRID = "0:1:101"
DEFAULT_XI_GRID = "0:0.99:100"
FIG2_PHOTON_NUMBERS = (0.5, 1.0, 3.0)
ORACLE_ETAS = (0.3, 0.6, 0.9)
ORACLE_TAUS = (0.5, 1.0)
ORACLE_TOL = 1e-8
SYMMETRY_TOL = 1e-10
ORACLE_TRUNCATION_TOL = 1e-14
DEFAULT_U_SAMPLES = 20


class ConfigError(EntanglementError, ValueError):
    """Invalid command-line configuration."""


#####################################
# RunConfig
#####################################


@dataclass(frozen=True)
class RunConfig:
    """Validated settings of one CLI run."""

    mode: str
    etas: Tuple[float, ...]
    taus: Tuple[float, ...] = ()
    photon_numbers: Tuple[float, ...] = ()
    xis: Tuple[float, ...] = ()
    alpha_max: int = DEFAULT_CUTOFF
    beta_max: int = DEFAULT_CUTOFF
    series_eps: float = DEFAULT_SERIES_EPS
    kkt_tol: float = DEFAULT_KKT_TOL
    residual_tol: float = DEFAULT_RESIDUAL_TOL
    oracle_tol: float = ORACLE_TOL
    symmetry_tol: float = SYMMETRY_TOL
    truncation_tol: float = ORACLE_TRUNCATION_TOL
    u_samples: int = DEFAULT_U_SAMPLES
    seed: int = DEFAULT_SEED
    workers: int = 1
    fmt: OutputFormat = "csv"
    output: Optional[pathlib.Path] = None
    corrupt_prefactor: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"Unknown mode '{self.mode}'.")
        if not self.etas:
            raise ConfigError("The eta grid is empty.")
        if any(not 0.0 <= eta <= 1.0 for eta in self.etas):
            raise ConfigError("Every eta must lie in [0, 1].")
        if self.taus and self.photon_numbers and len(self.taus) != len(self.photon_numbers):
            raise ConfigError("taus and photon_numbers must pair up.")
        if any(tau < 0 for tau in self.taus):
            raise ConfigError("tau must be non-negative.")
        if any(not 0.0 <= xi < 1.0 for xi in self.xis):
            raise ConfigError("Every xi must lie in [0, 1).")
        if self.alpha_max < 0 or self.beta_max < 0:
            raise ConfigError("Block cutoffs must be non-negative.")
        if min(
            self.series_eps,
            self.kkt_tol,
            self.residual_tol,
            self.oracle_tol,
            self.symmetry_tol,
            self.truncation_tol,
        ) <= 0:
            raise ConfigError("Tolerances must be positive.")
        if self.u_samples < 1 or self.workers < 1:
            raise ConfigError("u_samples and workers must be at least 1.")
        if self.fmt not in ("csv", "json"):
            raise ConfigError(f"Unknown output format '{self.fmt}'.")

    @property
    def output_path(self) -> pathlib.Path:
        return self.output if self.output is not None else default_output_path(self.mode, self.fmt)

    def model_params(self, eta: float, tau: float) -> ModelParams:
        return ModelParams(
            eta=eta,
            tau=tau,
            series_eps=self.series_eps,
            alpha_max=self.alpha_max,
            beta_max=self.beta_max,
            variant="typeset" if self.corrupt_prefactor else "derived",
        )

    def source_points(self) -> Tuple[Tuple[float, float], ...]:
        """(N, tau) pairs; N is derived from tau when only tau was given."""
        return tuple(zip(self.photon_numbers, self.taus))


#####################################
# Parsing
#####################################


def parse_grid(text: str) -> Tuple[float, ...]:
    """'start:stop:count' -> evenly spaced grid (inclusive); a plain number -> one point."""
    try:
        parts = [float(p) for p in text.split(":")]
    except ValueError as e:
        raise ConfigError(f"Malformed grid '{text}'.") from e
    if len(parts) == 1:
        return (parts[0],)
    if len(parts) != 3 or parts[2] < 1 or parts[2] != int(parts[2]):
        raise ConfigError(f"Grid '{text}' must be start:stop:count with integer count >= 1.")
    return tuple(float(x) for x in np.linspace(parts[0], parts[1], int(parts[2])))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="python -m runs.cli",
        description="Entanglement of lossy down-conversion states (relative entropy, bits).",
    )
    parser.add_argument("mode", choices=MODES)
    parser.add_argument("--eta", type=float, nargs="+", help="explicit transmittivities")
    parser.add_argument("--eta-grid", default=None, help=f"start:stop:count (default {DEFAULT_ETA_GRID})")
    source = parser.add_mutually_exclusive_group()
    source.add_argument("--tau", type=float, nargs="+", help="effective interaction times kappa*t")
    source.add_argument("--photons", type=float, nargs="+", help="average photon numbers N before loss")
    parser.add_argument("--xi-grid", default=DEFAULT_XI_GRID, help="xi grid for fig1 trajectories")
    parser.add_argument("--alpha-max", type=int, default=DEFAULT_CUTOFF)
    parser.add_argument("--beta-max", type=int, default=DEFAULT_CUTOFF)
    parser.add_argument("--series-eps", type=float, default=DEFAULT_SERIES_EPS)
    parser.add_argument("--kkt-tol", type=float, default=DEFAULT_KKT_TOL)
    parser.add_argument("--residual-tol", type=float, default=DEFAULT_RESIDUAL_TOL)
    parser.add_argument("--oracle-tol", type=float, default=ORACLE_TOL)
    parser.add_argument("--symmetry-tol", type=float, default=SYMMETRY_TOL)
    parser.add_argument("--truncation-tol", type=float, default=ORACLE_TRUNCATION_TOL)
    parser.add_argument("--u-samples", type=int, default=DEFAULT_U_SAMPLES)
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--format", dest="fmt", choices=("csv", "json"), default="csv")
    parser.add_argument("--output", type=pathlib.Path, default=None)
    parser.add_argument(
        "--corrupt-prefactor",
        action="store_true",
        help="use the typeset prefactor (negative control for oracle-check)",
    )
    parser.add_argument("--log-level", default="INFO")
    return parser


def _default_etas(mode: str) -> Tuple[float, ...]:
    if mode == "oracle-check":
        return ORACLE_ETAS
    return parse_grid(DEFAULT_ETA_GRID)


def config_from_args(args: argparse.Namespace) -> RunConfig:
    """Resolve grids and source parameters into a RunConfig."""
    if args.eta and args.eta_grid:
        raise ConfigError("Give either --eta or --eta-grid, not both.")
    if args.eta:
        etas = tuple(args.eta)
    elif args.eta_grid:
        etas = parse_grid(args.eta_grid)
    else:
        etas = _default_etas(args.mode)

    if args.photons:
        if any(n < 0 for n in args.photons):
            raise ConfigError("Average photon numbers must be non-negative.")
        photon_numbers = tuple(args.photons)
        taus = tuple(photons_to_tau(n) for n in photon_numbers)
    elif args.tau:
        taus = tuple(args.tau)
        photon_numbers = tuple(2.0 * math.sinh(t) ** 2 for t in taus)
    elif args.mode == "oracle-check":
        taus = ORACLE_TAUS
        photon_numbers = tuple(2.0 * math.sinh(t) ** 2 for t in taus)
    elif args.mode in ("fig2",):
        photon_numbers = FIG2_PHOTON_NUMBERS
        taus = tuple(photons_to_tau(n) for n in photon_numbers)
    elif args.mode in ("fig1", "polytope"):
        taus, photon_numbers = (), ()
    else:
        raise ConfigError(f"Mode '{args.mode}' needs --tau or --photons.")

    return RunConfig(
        mode=args.mode,
        etas=etas,
        taus=taus,
        photon_numbers=photon_numbers,
        xis=parse_grid(args.xi_grid) if args.mode == "fig1" else (),
        alpha_max=args.alpha_max,
        beta_max=args.beta_max,
        series_eps=args.series_eps,
        kkt_tol=args.kkt_tol,
        residual_tol=args.residual_tol,
        oracle_tol=args.oracle_tol,
        symmetry_tol=args.symmetry_tol,
        truncation_tol=args.truncation_tol,
        u_samples=args.u_samples,
        seed=args.seed,
        workers=args.workers,
        fmt=args.fmt,
        output=args.output,
        corrupt_prefactor=args.corrupt_prefactor,
    )
