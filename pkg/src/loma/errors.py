"""Exception hierarchy.

Each exception carries the CLI exit code it maps to, so the command line
layer can translate failures without a lookup table.
"""


class LomaError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class UsageError(LomaError, ValueError):
    """Invalid parameter or flag value."""

    exit_code = 2


class DataValidationError(LomaError, ValueError):
    """Input data violates a structural or numeric requirement."""

    exit_code = 4


class DimensionError(DataValidationError):
    pass


class NumericError(DataValidationError):
    pass


class InsufficientPointsError(DataValidationError):
    pass


class SingularFitError(DataValidationError):
    """No sphere is determined by the given points (all points coincide)."""


class EmptyClassError(DataValidationError):
    pass


class InfeasibleConfigError(DataValidationError):
    pass


class ParseError(DataValidationError):
    def __init__(self, message, row=None, column=None):
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.row = row
        self.column = column


class RangeError(DataValidationError):
    pass


class ChecksumError(DataValidationError):
    pass


class UnknownFamilyError(UsageError):
    pass
