"""Exception hierarchy shared across the package.

The command line tool maps these onto exit codes, so new exception
types should subclass whichever branch carries the intended code
(degenerate data vs. numerical failure).
"""
from __future__ import annotations


class PlaError(Exception):
    """Base class for all errors raised by this package."""


class DegenerateDataError(PlaError):
    """Input is structurally unusable (too small, zero variance, not PD)."""


class InsufficientDataError(DegenerateDataError):
    """Fewer observations than the operation needs."""


class NotCenteredError(PlaError):
    """An operation that requires mean-centred input received raw data."""


class StructuralZeroError(PlaError):
    """A sparsity or block-zero requirement is violated."""


class SingularMatrixError(PlaError):
    """Matrix is singular or numerically too ill-conditioned to solve."""


class NumericalError(PlaError):
    """An iterative numerical routine failed to converge."""


class BlockMismatchError(PlaError):
    """Eigenpair matching found a different number of pairs than block variables.

    ``found`` carries the indices that did qualify, for diagnostics.
    """

    def __init__(self, message: str, found: tuple[int, ...] = ()):
        super().__init__(message)
        self.found = tuple(found)


class ConstructionError(PlaError):
    """A synthetic population could not be built within the retry budget."""


class CsvFormatError(PlaError):
    """Input CSV is malformed; message cites line and column."""
