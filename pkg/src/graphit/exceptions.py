"""Exception hierarchy shared across the package."""

from __future__ import annotations


class GraphitError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(GraphitError):
    """Invalid scenario/CLI configuration."""


class DimensionMismatchError(GraphitError, ValueError):
    """Two model quantities have incompatible shapes."""


class NotPositiveDefiniteError(GraphitError, ValueError):
    """A covariance matrix is not symmetric positive (semi)definite."""


class SingularPredictiveCovarianceError(GraphitError, RuntimeError):
    """The predictive observation covariance is numerically singular.

    Carries the 1-based time step at which the failure occurred.
    """

    def __init__(self, step: int, message: str | None = None):
        self.step = step
        super().__init__(message or f"predictive covariance numerically singular at step {step}")


class SingularStatisticsError(GraphitError, RuntimeError):
    """The second-moment statistic is singular during a closed-form update.

    Carries the 1-based outer iteration at which the failure occurred.
    """

    def __init__(self, iteration: int, message: str | None = None):
        self.iteration = iteration
        super().__init__(message or f"second-moment statistic singular at outer iteration {iteration}")
