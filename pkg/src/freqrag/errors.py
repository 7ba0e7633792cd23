"""Exception types shared across the package.

The CLI maps these onto exit codes: usage problems exit 1, ``DataError``
(and I/O failures) exit 2, ``NumericError`` exits 3.
"""


class FreqragError(Exception):
    """Base class for package-specific failures."""


class DataError(FreqragError):
    """Malformed or invalid input data: bad file layout, dimension
    mismatches, duplicate ids, non-finite values, zero vectors where a
    direction is required, unknown sample ids."""


class NumericError(FreqragError):
    """Numeric breakdown at run time: non-finite activations, divergent
    training loss, non-finite gradients."""
