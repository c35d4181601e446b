"""Exception types raised across the package."""


class HodgeProbeError(Exception):
    """Base class for all library errors."""


class FieldMismatch(HodgeProbeError):
    """Two scalars live in quadratic fields with different radicands."""


class NotSymmetric(HodgeProbeError):
    pass


class Degenerate(HodgeProbeError):
    """An alternating form that was required to be nondegenerate is not."""


class AmbientMismatch(HodgeProbeError):
    pass


class DegreeZero(HodgeProbeError):
    pass


class DegreeMismatch(HodgeProbeError):
    pass


class DegreeTooLow(HodgeProbeError):
    pass


class EvenP(HodgeProbeError):
    pass


class InvariantViolation(HodgeProbeError):
    """A constructed object failed one of its defining axioms."""

    def __init__(self, axiom, message=""):
        self.axiom = axiom
        super().__init__(f"{axiom}: {message}" if message else axiom)


class PropertyFailure(InvariantViolation):
    pass


class NotSurjective(HodgeProbeError):
    pass


class NotComplexLinear(HodgeProbeError):
    pass


class NotIntegral(HodgeProbeError):
    pass


class DegenerateSplit(HodgeProbeError):
    pass


class BudgetExceeded(HodgeProbeError):
    def __init__(self, estimate, cap):
        self.estimate = estimate
        self.cap = cap
        super().__init__(f"estimated {estimate} terms exceeds cap {cap}")


class DegenerateCase(HodgeProbeError):
    pass


class UnknownLabel(HodgeProbeError):
    pass


class ParseError(HodgeProbeError):
    pass


class ValidationError(HodgeProbeError):
    pass
