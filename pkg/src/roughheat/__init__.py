"""Simulation of the heat equation driven by a rough fractional noise.

The noise is a truncated fractional Brownian sheet sampled on a dyadic grid;
the solver is a piecewise-linear Galerkin scheme with implicit Euler steps,
checked against the mild solution in windowed negative Sobolev norms.
"""

from .errors import (ConfigError, CovarianceError, GridError, NumericalError, PivotError,
                     RoughHeatError)
from .fractional_field import *  # noqa: F401,F403
from .fractional_field import __all__ as _ff
from .galerkin import *  # noqa: F401,F403
from .galerkin import __all__ as _gk
from .noise_grid import *  # noqa: F401,F403
from .noise_grid import __all__ as _ng
from .reference_solutions import *  # noqa: F401,F403
from .reference_solutions import __all__ as _rs
from .sobolev import *  # noqa: F401,F403
from .sobolev import __all__ as _sb

__version__ = "0.1.0"

__all__ = [*_ff, *_ng, *_gk, *_rs, *_sb, "ConfigError", "CovarianceError", "GridError",
           "NumericalError", "PivotError", "RoughHeatError"]
