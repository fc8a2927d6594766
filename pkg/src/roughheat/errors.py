"""Exception types raised by the package."""


class RoughHeatError(Exception):
    """Base class for all package errors."""


class ConfigError(RoughHeatError, ValueError):
    """Invalid parameters or experiment configuration."""


class NumericalError(RoughHeatError, ArithmeticError):
    """A numerical routine met an input it cannot handle."""


class CovarianceError(NumericalError):
    """Matrix is not a usable (symmetric, positive semidefinite) covariance."""


class PivotError(NumericalError):
    """Zero pivot during a tridiagonal elimination."""


class GridError(RoughHeatError, IndexError):
    """Index or sample grid outside the admissible range."""
