"""Simulation of a DQD charge qubit read out through a driven microwave resonator."""

__version__ = "0.1.0"

from .hilbert import HilbertSpace, default_fock_levels
from .model import PulseSequence, SystemParams, derived, qubit_splitting

__all__ = [
    "__version__",
    "HilbertSpace",
    "default_fock_levels",
    "SystemParams",
    "PulseSequence",
    "derived",
    "qubit_splitting",
]
