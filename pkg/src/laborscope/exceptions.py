"""Exception types shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, DataError -> 3,
NumericError -> 4.
"""


class LaborscopeError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class ConfigError(LaborscopeError):
    """Invalid configuration: bad parameter values, missing columns, bad flags."""

    exit_code = 2


class DataError(LaborscopeError):
    """Input data violates a contract: missing files, malformed rows, label mismatches."""

    exit_code = 3


class NumericError(LaborscopeError):
    """Numerical failure: degenerate inputs, undefined statistics, broken invariants."""

    exit_code = 4
