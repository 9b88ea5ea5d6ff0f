"""Exception hierarchy shared across the package.

Each class maps to one CLI exit code so failures can be triaged from
scripts without parsing messages (see ``saredge.cli``).
"""


class SarEdgeError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ConfigError(SarEdgeError):
    """Invalid experiment configuration; message carries the field path."""

    exit_code = 2


class FormatError(SarEdgeError):
    """Malformed or truncated on-disk artifact (raster, pulse dump, ...)."""

    exit_code = 3


class GeometryError(SarEdgeError):
    """Degenerate or inconsistent imaging geometry."""

    exit_code = 4


class NumericalError(SarEdgeError):
    """Non-finite values or a failed factorization during computation."""

    exit_code = 4
