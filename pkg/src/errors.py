"""
Exception hierarchy for the Tavis-Cummings saturation toolkit
"""


class SimulationError(Exception):
    """Base class for every failure raised by the toolkit."""


class ConfigError(SimulationError, ValueError):
    """Invalid parameters or a malformed/unknown configuration entry."""


class SolverError(SimulationError):
    """A numerical solve failed or produced a state violating its invariants."""


class TruncationError(SolverError):
    """Automatic Fock truncation exceeded its hard cap."""


class OutputError(SimulationError, OSError):
    """Writing results to disk failed."""
