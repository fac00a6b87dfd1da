"""Numerical experiments on L^2 restriction of weighted Gauss sums to monomial curves."""

from .errors import (ConvergenceError, InvalidInputError, RecordParseError,
                     ResourceError, RestrictLabError)

__version__ = "0.1.0"

__all__ = ["ConvergenceError", "InvalidInputError", "RecordParseError",
           "ResourceError", "RestrictLabError", "__version__"]
