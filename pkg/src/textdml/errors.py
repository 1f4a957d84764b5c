"""Exception hierarchy shared across the package.

Each family maps to one process exit code in the CLI, so estimator code
should raise the most specific class that applies.
"""


class TextDmlError(Exception):
    """Base class for all package errors."""


class ConfigError(TextDmlError):
    """Invalid configuration values or malformed config files."""


class ParameterError(ConfigError):
    """A function argument is outside its documented domain."""


class DataError(TextDmlError):
    """Input data is malformed: wrong shapes, NaNs, unknown columns."""


class InsufficientDataError(DataError):
    """Too few rows to fit or evaluate."""


class DegenerateDataError(DataError):
    """Data is technically well-formed but statistically unusable
    (single treatment arm, constant target, empty sector)."""


class NumericalError(TextDmlError):
    """A numerical procedure failed: rank deficiency, non-convergence,
    vanishing denominators."""


class IdentificationError(NumericalError):
    """The residualized treatment carries (almost) no variation, so the
    target coefficient is not identified."""


class TruthAccessError(TextDmlError):
    """Oracle fields were read while the truth guard is engaged."""
