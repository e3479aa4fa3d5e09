"""Exception hierarchy.

Errors fall in two families: configuration problems (bad parameters, bad
files, incompatible options) and numerical problems (quadrature budget
exhausted, degenerate inputs to a bound).  The CLI maps the first family to
exit code 2 and the second to exit code 3.
"""


class HomdelayError(Exception):
    """Base class for all package errors."""


class ConfigError(HomdelayError):
    """Invalid parameter, option combination, or input file."""


class CoverageError(ConfigError):
    """Detector bin range does not cover enough of the spectral density."""


class RangeError(HomdelayError):
    """A frequency difference fell outside the detector's bin range."""


class EmptySampleError(HomdelayError):
    """An estimator was handed zero records."""


class QuadratureError(HomdelayError):
    """Adaptive quadrature could not meet the requested tolerance."""


class DomainError(HomdelayError):
    """A numeric argument outside the mathematical domain of an operation."""


class InsufficientDataError(HomdelayError):
    """Too few samples for the requested statistic."""
