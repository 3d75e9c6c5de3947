"""Exception types raised by the solver and its helpers."""


class DomainError(ValueError):
    """An argument lies outside the domain of a model function."""


class NonPositiveArea(DomainError):
    """A cross-sectional area sample is zero or negative.

    Parameters
    ----------
    cell : int or None
        Index of the offending cell, if known.
    node : int or None
        Index of the offending Gauss-Lobatto node, if known.
    """

    def __init__(self, message, cell=None, node=None):
        super().__init__(message)
        self.cell = cell
        self.node = node


class NoConvergence(RuntimeError):
    """An iterative solve did not reach its tolerance."""


class ConfigError(ValueError):
    """A scenario configuration is invalid."""


class SolverFailure(RuntimeError):
    """Time integration could not produce an admissible state."""
