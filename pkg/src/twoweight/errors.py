"""Exception types raised across the package."""


class TwoWeightError(Exception):
    """Base class; carries an optional context dict for reports."""

    def __init__(self, message, **context):
        super().__init__(message)
        self.context = context


class NumericError(TwoWeightError):
    """Numerical failures surfaced by the CLI with exit status 1."""


class BudgetExceeded(NumericError):
    pass


class SingularEvaluation(NumericError):
    pass


class DivergentTail(NumericError):
    pass


class BracketingFailed(NumericError):
    pass


class ZeroMass(NumericError):
    pass


class ZeroDenominator(NumericError):
    pass


class AtomOnCut(NumericError):
    pass


class AtomOnEndpoint(NumericError):
    pass


class OverlappingKeepSet(TwoWeightError):
    pass


class WindowTooLarge(TwoWeightError):
    pass


class UndeterminedAtBoundary(TwoWeightError):
    pass


class MixedGrids(TwoWeightError):
    pass


class PreconditionViolated(TwoWeightError):
    pass


class NotAdmissible(TwoWeightError):
    pass


class NonAtomic(TwoWeightError):
    pass


class SupportsOverlap(TwoWeightError):
    pass


class SeparationTooSmall(TwoWeightError):
    pass


class DepthTooLarge(TwoWeightError):
    pass


class PointOnSupport(TwoWeightError):
    pass


class ConfigInvalid(TwoWeightError):
    pass


class InvariantViolation(TwoWeightError):
    pass
