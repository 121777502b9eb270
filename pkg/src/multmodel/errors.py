"""Exception hierarchy shared by every module."""


class MultModelError(Exception):
    """Base class for all library errors."""


class InvalidValue(MultModelError, ValueError):
    """A value lies outside its variable's domain."""


class ScopeError(MultModelError, ValueError):
    """An instance does not assign a variable that is required."""


class BottomProjection(MultModelError, ValueError):
    """Projection of the unsatisfiable clause was requested."""


class QueryError(MultModelError, ValueError):
    """Malformed query or evidence."""


class OrderError(MultModelError, ValueError):
    """An explicit elimination order is not a permutation of the eliminable variables."""


class FormatError(MultModelError, ValueError):
    """Semantically invalid model input (bad ids, wrong counts, broken invariants)."""


class ParseError(MultModelError, ValueError):
    """Syntax error in a model file."""

    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class NonPositiveTable(FormatError):
    pass


class NotAPartition(FormatError):
    pass


class TooManyParents(FormatError):
    pass


class DuplicateTerm(FormatError):
    pass


class TooLarge(MultModelError):
    """An enumeration would exceed the configured cell cap."""


class CapacityExceeded(MultModelError):
    """A candidate set grew past the configured cap."""


class ValidationSkipped(MultModelError):
    """Neither exact validation route is affordable for this model."""


class DegenerateZero(MultModelError, ArithmeticError):
    """A zero denominator met a non-zero numerator during elimination."""


class ZeroEvidenceProbability(MultModelError, ArithmeticError):
    """The evidence has probability zero, so nothing can be normalized."""
