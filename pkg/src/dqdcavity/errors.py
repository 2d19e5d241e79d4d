"""Exception hierarchy for the simulation engine."""


class SimulationError(Exception):
    """Base class for all numerical/physical failures of the engine."""


class DimensionMismatchError(SimulationError):
    """Operator or state dimensions do not match the declared space."""


class InvalidStateError(SimulationError):
    """A density matrix violates hermiticity, trace or positivity bounds."""


class TruncationError(SimulationError):
    """Population of the highest Fock level exceeded the safety bound."""


class IntegrationError(SimulationError):
    """Adaptive time stepping failed (step underflow or trace drift)."""


class ConvergenceError(SimulationError):
    """A linear solve or fixed-point iteration did not converge."""


class UndefinedPhaseError(SimulationError):
    """The cavity field amplitude is too small to define a phase."""


class CalibrationError(SimulationError):
    """Drive calibration did not reach the requested photon number."""


class AnalysisError(SimulationError):
    """Post-processing fit is degenerate or did not converge."""


class ConfigError(Exception):
    """Invalid run configuration (unknown/missing keys, bad values)."""
