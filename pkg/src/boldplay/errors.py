"""Exception hierarchy shared by every boldplay module."""


class BoldPlayError(Exception):
    """Base class for all errors raised by this package."""


class PreconditionViolated(BoldPlayError, ValueError):
    pass


class RationalEll(PreconditionViolated):
    """Raised when an operation needs an irrational stake cap."""


class HypothesisViolated(PreconditionViolated):
    """Starting pair lies outside the region a lemma check covers."""


class ParseError(BoldPlayError, ValueError):
    pass


class ConfigError(BoldPlayError, ValueError):
    pass


class ConstructionFailed(BoldPlayError):
    pass


class SearchExhausted(BoldPlayError):
    def __init__(self, message, attempts=()):
        super().__init__(message)
        self.attempts = list(attempts)


class InconsistencyDetected(BoldPlayError):
    def __init__(self, message, n=None):
        super().__init__(message)
        self.n = n


class InequalityViolated(BoldPlayError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class InvariantViolated(BoldPlayError):
    pass
