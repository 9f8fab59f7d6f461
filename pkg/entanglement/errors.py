"""
errors.py - exception hierarchy for the entanglement library.

Library code raises these; the command-line runner maps them to exit codes.
"""


class EntanglementError(Exception):
    """Base class for every error raised by this package."""


class SpinDomainError(EntanglementError, ValueError):
    """Invalid spin labels, triangle violations or mismatched dimensions."""


class SeriesDivergenceError(EntanglementError, ArithmeticError):
    """A photon-counting series diverges (xi >= 1) or fails to settle."""


class EmptyBlockError(EntanglementError):
    """The photon-number block (alpha, beta) carries zero probability."""

    def __init__(self, alpha: int, beta: int):
        super().__init__(f"Block ({alpha},{beta}) has zero probability.")
        self.alpha = alpha
        self.beta = beta


class SymmetryViolationError(EntanglementError):
    """Populations are not consistent with an SU(2)-invariant block state."""


class DiagonalizationError(EntanglementError):
    """No common eigenbasis found for the partially transposed projectors."""


class SolverError(EntanglementError):
    """The relative entropy minimization could not produce a certified optimum."""
