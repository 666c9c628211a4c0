"""Exception types raised by the reduction library."""
from __future__ import annotations


class ReductionError(Exception):
    """Base class for all library errors."""


class GaugeSingular(ReductionError):
    """The Faddeev-Popov matrix is singular at the requested point."""

    def __init__(self, message: str, condition: float = float("inf")):
        super().__init__(f"{message} (condition estimate {condition:.3e})")
        self.condition = condition


class NoConvergence(ReductionError):
    """A Newton iteration hit its iteration cap."""

    def __init__(self, message: str, iterations: int = 0, residual: float = float("nan")):
        super().__init__(f"{message} after {iterations} iterations (residual {residual:.3e})")
        self.iterations = iterations
        self.residual = residual


class ChartDomainError(ReductionError):
    """Exponential coordinates were used outside their chart."""


class NotPositiveDefinite(ReductionError):
    """A metric or orbit matrix failed its positive-definiteness check."""


class MetricSingular(ReductionError):
    """The configuration metric cannot be inverted."""


class FDInconsistent(ReductionError):
    """Finite-difference refinements disagree beyond tolerance."""


class SingularOperator(ReductionError):
    """A lattice operator could not be factorized."""


class GridMismatch(ReductionError):
    """Two trajectories are sampled on different time grids."""


class UnknownTerm(ReductionError, KeyError):
    """A lattice term identifier is not recognised."""


class ConfigError(ReductionError, ValueError):
    """A run or lattice configuration failed validation."""
