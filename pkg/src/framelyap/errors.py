"""Exception types shared across the library.

Every precondition violation raises a subclass of ValidationError so the
CLI can map them uniformly to exit code 2.
"""


class ValidationError(ValueError):
    """Base class for precondition violations."""


class UnknownCell(ValidationError):
    pass


class AtomNotSplittable(ValidationError):
    pass


class FractionOutOfRange(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class KeptMeasureOutOfRange(ValidationError):
    pass


class WeightOutOfRange(ValidationError):
    pass


class EpsilonNonpositive(ValidationError):
    pass


class VariationUnboundedOnCell(ValidationError):
    """Generator oscillates beyond estimable bound at maximum refinement depth."""


class TauOutOfOpenInterval(ValidationError):
    pass


class InfiniteTotalMeasure(ValidationError):
    pass


class TooManyCells(ValidationError):
    pass


class TooManyVectors(ValidationError):
    pass


class UnknownStrategy(ValidationError):
    pass


class NonHermitianInput(ValidationError):
    pass


class ResolutionNotPowerOfTwo(ValidationError):
    pass


class DimensionTooLargeForResolution(ValidationError):
    pass


class GuaranteeViolation(RuntimeError):
    """A postcondition failed at recheck. Signals a bug, never expected."""
