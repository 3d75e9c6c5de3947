"""High-order well-balanced active-flux solver for 1-D blood flow in elastic vessels."""

from .errors import ConfigError, DomainError, NoConvergence, NonPositiveArea, SolverFailure
from .model import ARTERY, VEIN, ModelParams

__all__ = [
    "ARTERY",
    "VEIN",
    "ConfigError",
    "DomainError",
    "ModelParams",
    "NoConvergence",
    "NonPositiveArea",
    "SolverFailure",
]

__version__ = "0.1.0"
