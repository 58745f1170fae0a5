class MuntzError(Exception):
    pass


class InvalidInputError(MuntzError):
    pass


class CertificateFormatError(InvalidInputError):
    pass


class InsufficientSequenceError(MuntzError):
    """The stored exponent prefix ran out before the request was met."""

    def __init__(self, message: str, achieved: int):
        super().__init__(message)
        self.achieved = achieved


class NumericalInconsistencyError(MuntzError):
    pass


class ToleranceError(MuntzError):
    pass


class EmptyIntervalError(MuntzError):
    pass


class NotApplicableError(MuntzError):
    pass


class EdgeSpikeError(InvalidInputError):
    """Raised for alpha = 0; the monotone edge profile is attached."""

    def __init__(self, message: str, profile):
        super().__init__(message)
        self.profile = profile


class ConstructionFailure(MuntzError):
    def __init__(self, message: str, condition: str, n: int | None = None, point=None):
        super().__init__(message)
        self.condition = condition
        self.n = n
        self.point = point


class NotFoundError(MuntzError):
    def __init__(self, message: str, best_margins: dict | None = None):
        super().__init__(message)
        self.best_margins = best_margins or {}
