"""Exception types raised by freestein."""


class FreeSteinError(Exception):
    """Base class for all computational failures."""


class NonPositiveMass(FreeSteinError):
    pass


class NegativeDensity(FreeSteinError):
    pass


class QuantileNonConvergent(FreeSteinError):
    pass


class SubordinationNonConvergent(FreeSteinError):
    pass


class NewtonDiverged(FreeSteinError):
    pass


class WorkingIntervalTooSmall(FreeSteinError):
    pass


class NonConvexPotential(FreeSteinError):
    pass


class NotCentered(FreeSteinError):
    pass


class DegenerateTarget(FreeSteinError):
    pass


class NoConvergence(FreeSteinError):
    def __init__(self, msg, residual=None):
        super().__init__(msg)
        self.residual = residual


class OutOfRange(FreeSteinError):
    pass


class LogOfNonpositive(FreeSteinError):
    pass


class BarycenterNotZero(FreeSteinError):
    pass


class HypothesisNotMet(FreeSteinError):
    def __init__(self, failed):
        self.failed = list(failed)
        super().__init__("hypotheses not met: " + ", ".join(self.failed))


class IndexOutOfArity(FreeSteinError):
    pass


class ArityMismatch(FreeSteinError):
    pass


class ConstantTermInSymmetrize(FreeSteinError):
    pass


class NotPositiveDefinite(FreeSteinError):
    pass


class DegreeTooLarge(FreeSteinError):
    pass


class ExprSyntaxError(FreeSteinError):
    """Parse failure; ``position`` is the 0-based column of the offending token."""

    def __init__(self, msg, position):
        self.position = position
        super().__init__(f"{msg} (at position {position})")
