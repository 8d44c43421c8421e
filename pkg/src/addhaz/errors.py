"""Exception hierarchy.

Two families matter to callers: :class:`InputError` (bad data or arguments,
CLI exit code 2) and :class:`NumericalError` (the estimator could not be
computed, CLI exit code 1).
"""


class AddHazError(Exception):
    """Base class for all package errors."""


class InputError(AddHazError, ValueError):
    pass


class NumericalError(AddHazError, ArithmeticError):
    pass


class MissingColumn(InputError):
    def __init__(self, name):
        super().__init__(f"column {name!r} not found in input")
        self.name = name


class NonFiniteValue(InputError):
    def __init__(self, row, column=None):
        where = f" in column {column!r}" if column is not None else ""
        super().__init__(f"missing or non-finite value at row {row}{where}")
        self.row = row
        self.column = column


class NonBinaryStatus(InputError):
    def __init__(self, row, value=None):
        super().__init__(f"status must be 0 or 1, got {value!r} at row {row}")
        self.row = row
        self.value = value


class EmptyDataset(InputError):
    pass


class NegativeTime(InputError):
    pass


class DimensionMismatch(InputError):
    pass


class DegenerateColumn(InputError):
    def __init__(self, j, message=None):
        super().__init__(message or f"W column {j} has zero spread")
        self.j = j


class IncompleteValues(InputError):
    pass


class NegativeUpper(InputError):
    pass


class UnsupportedDimension(InputError):
    pass


class TooFewReplicates(InputError):
    pass


class AllTimesTied(InputError):
    pass


class NegativeHazardOffset(InputError):
    pass


class DivisionByNonzeroOverZero(NumericalError):
    """A ratio of step functions had nonzero mass over an empty risk set."""


class NoEvents(NumericalError):
    pass


class SingularDenominator(NumericalError):
    pass


class SingularD(SingularDenominator):
    pass


class SingularSystem(NumericalError):
    def __init__(self, message, condition=None, grid_points=None):
        super().__init__(message)
        self.condition = condition
        self.grid_points = grid_points


class EmptyRiskSet(NumericalError):
    def __init__(self, t):
        super().__init__(f"risk set is empty at t={t!r}")
        self.t = t


class NoConvergence(NumericalError):
    pass


class GroupWithoutEvents(UserWarning):
    pass


class NoEventsWarning(UserWarning):
    pass


class SparseGridWarning(UserWarning):
    pass


class TruncatedFollowUpWarning(UserWarning):
    pass
