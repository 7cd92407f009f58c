"""Exception and warning classes shared across the package."""


class HyponormError(Exception):
    """Base class for all library errors."""


class MeasureError(HyponormError, ValueError):
    pass


class NonProbabilityMass(MeasureError):
    pass


class EmptySupport(MeasureError):
    pass


class HypothesisViolation(MeasureError):
    """The measure breaks ``1 in supp(mu)`` or ``mu({1}) = 0``."""


class AtomAtOne(HypothesisViolation):
    pass


class SupportBelowOne(HypothesisViolation):
    pass


class QuadratureNonConvergence(HyponormError, ArithmeticError):
    pass


class DegenerateDenominator(HyponormError, ArithmeticError):
    pass


class NonConvergence(HyponormError, ArithmeticError):
    pass


class ZeroVector(HyponormError, ValueError):
    pass


class CancellationWarning(RuntimeWarning):
    """A difference of moments lost more than 8 significant digits."""


class NonConvergenceWarning(RuntimeWarning):
    pass
