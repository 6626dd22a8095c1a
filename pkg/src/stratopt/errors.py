"""Exception taxonomy shared across the package.

The CLI maps these onto its exit codes (data 3, infeasible 4, size cap 5);
plain ValueError is reserved for caller misuse and maps to the usage code.
"""


class StratOptError(Exception):
    """Base class for stratopt-specific failures."""


class DataError(StratOptError):
    """Malformed or incomplete input data (bad CSV cell, missing column, ...)."""


class InfeasibleError(StratOptError):
    """No assignment can satisfy the requested constraints."""


class SizeCapError(StratOptError):
    """Instance exceeds a solver's hard size cap."""
