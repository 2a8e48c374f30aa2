"""Exception hierarchy.

Every error raised by the library derives from :class:`OccuLawError`, which is
itself a ``ValueError`` so callers that only care about bad input can catch
that. The CLI maps the class name to the ``error`` field of its JSON error
payload.
"""


class OccuLawError(ValueError):
    pass


class NotSquare(OccuLawError):
    pass


class TooSmall(OccuLawError):
    pass


class NonPositiveOffDiagonal(OccuLawError):
    pass


class RowSumViolation(OccuLawError):
    pass


class InvalidDistribution(OccuLawError):
    pass


class InvalidParameter(OccuLawError):
    pass


class SingularSolve(OccuLawError):
    pass


class BadRange(OccuLawError):
    pass


class NotDiagonalizable(OccuLawError):
    pass


class ZetaNotGreaterThanOne(OccuLawError):
    pass


class DegreeOverflow(OccuLawError):
    pass


class NonPositiveTheta(OccuLawError):
    pass


class BudgetExceeded(OccuLawError):
    pass


class NotSimplexPoint(OccuLawError):
    pass


class SpecError(OccuLawError):
    """Malformed experiment specification (unknown or missing fields)."""
