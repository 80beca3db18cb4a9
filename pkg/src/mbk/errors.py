"""Exception hierarchy.

Every error raised on bad user input derives from :class:`ValidationError`
so the CLI can map it to exit code 2 in one place.
"""


class MBKError(Exception):
    """Base class for all package errors."""


class ValidationError(MBKError, ValueError):
    pass


class NonPositiveParameter(ValidationError):
    pass


class DeterminantNotPositive(ValidationError):
    pass


class GcdNotOne(ValidationError):
    pass


class GammaBelowOne(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class DisjointUnion(ValidationError):
    pass


class AlgebraNodeNotSupported(MBKError):
    pass


class EmptyRegionSuspected(MBKError):
    pass


class BoundaryUndecidable(MBKError):
    def __init__(self, message, alphas=()):
        super().__init__(message)
        self.alphas = list(alphas)


class OracleInconclusive(MBKError):
    pass


class ToleranceNotReached(MBKError):
    pass


class NotConverged(MBKError):
    def __init__(self, message, theta=None):
        super().__init__(message)
        self.theta = theta


class EnvelopeViolated(MBKError):
    pass


class SequenceNotIncreasing(MBKError):
    pass
