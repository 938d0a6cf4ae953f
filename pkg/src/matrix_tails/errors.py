"""Exception types raised across the package."""


class MatrixTailsError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(MatrixTailsError, ValueError):
    pass


class NotPositiveDefinite(MatrixTailsError, ValueError):
    pass


class NonFinite(MatrixTailsError, ValueError):
    pass


class KindMismatch(MatrixTailsError, ValueError):
    pass


class DomainError(MatrixTailsError, ValueError):
    pass


class SideDomainError(DomainError):
    """Chernoff level on the wrong side of the mean."""


class ThetaOutOfDomain(DomainError):
    pass


class EmptyDomain(MatrixTailsError, ValueError):
    pass


class SpecInvalid(MatrixTailsError, ValueError):
    pass


class SupportTooLarge(MatrixTailsError, ValueError):
    pass


class NotEnumerable(MatrixTailsError, ValueError):
    pass


class GridMismatch(MatrixTailsError, ValueError):
    pass


class TooManySummands(MatrixTailsError, ValueError):
    pass
