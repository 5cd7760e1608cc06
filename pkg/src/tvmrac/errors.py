"""Exception hierarchy shared by every tvmrac module."""


class TvmracError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(TvmracError, ValueError):
    pass


class SingularSystem(TvmracError, ArithmeticError):
    pass


class RankDeficient(TvmracError, ArithmeticError):
    pass


class NotSymmetric(TvmracError, ValueError):
    pass


class NotPositiveDefinite(TvmracError, ValueError):
    pass


class DerivativeSingularity(TvmracError, ArithmeticError):
    pass


class ThresholdOutOfRange(TvmracError, ValueError):
    pass


class NonPositiveEnvelope(TvmracError, ValueError):
    """Raised when a derived error envelope is not strictly positive.

    ``t`` holds the first grid time where the envelope is <= 0.
    """

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class BarrierBreach(TvmracError, RuntimeError):
    """The tracking error reached the barrier boundary.

    ``t`` is the stage time at which the barrier denominator fell below the
    guard, ``log`` the partial :class:`~tvmrac.simulation.SimLog` up to the
    last completed sample (may be ``None`` outside a full run).
    """

    def __init__(self, message, t=None, log=None):
        super().__init__(message)
        self.t = t
        self.log = log


class NonFiniteState(TvmracError, ArithmeticError):
    def __init__(self, message, t=None, log=None):
        super().__init__(message)
        self.t = t
        self.log = log


class EmptyWindow(TvmracError, ValueError):
    pass


class ParseError(TvmracError, ValueError):
    pass


class ValidationError(TvmracError, ValueError):
    pass
