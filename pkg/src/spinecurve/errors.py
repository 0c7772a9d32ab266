"""Exception hierarchy shared across the package."""


class SpineCurveError(Exception):
    """Base class for all errors raised by spinecurve."""


class ValidationError(SpineCurveError, ValueError):
    """Input data violates a domain invariant."""


class CoincidentPoints(ValidationError):
    pass


class SteepEndplate(ValidationError):
    pass


class CoincidentCenters(ValidationError):
    pass


class SchemaError(ValidationError):
    """A landmark or cohort file does not match its schema."""


class NonFiniteInput(ValidationError):
    pass


class ShapeMismatch(ValidationError):
    pass


class InfeasibleSpec(ValidationError):
    pass


class EmptySet(ValidationError):
    pass


class NoGtCurves(EmptySet):
    pass


class NoPredCurves(EmptySet):
    pass


class EmptyIntersection(EmptySet):
    pass


class IncompleteSpine(ValidationError):
    pass


class ConstantSeries(ValidationError):
    pass


class LengthMismatch(ValidationError):
    pass


class TooFewPoints(ValidationError):
    pass


class MissingColumns(SchemaError):
    pass
