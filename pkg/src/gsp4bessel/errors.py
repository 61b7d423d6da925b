"""Exception types shared across the package."""


class Gsp4Error(Exception):
    """Base class for package errors."""


class DomainError(Gsp4Error, ValueError):
    """Argument outside the domain where a formula is defined."""


class NotSimilitude(DomainError):
    pass


class SingularAutomorphyFactor(DomainError):
    pass


class WrongComponent(DomainError):
    """Group element with a multiplier of the wrong sign."""


class NotInAlgebra(DomainError):
    pass


class SingularConstantTerm(DomainError):
    """Jet operation undefined at the expansion point."""


class ChartSingularity(DomainError):
    """Chart coordinates on a pole of an operator formula."""


class SingularBase(DomainError):
    pass


class InvalidWeights(DomainError):
    pass


class NotRepresentable(DomainError):
    """No Bessel function exists for the requested weights."""


class JetOrderExhausted(DomainError):
    pass


class PoleOfGamma(DomainError):
    pass


class PoleOfQ(DomainError):
    pass


class ParameterRegionUnsupported(DomainError):
    pass


class DivergentRegion(DomainError):
    pass


class NoConvergence(Gsp4Error, RuntimeError):
    """Iterative solver failed to reach its tolerance."""


class QuadratureNotConverged(NoConvergence):
    pass


class ShapeMismatch(Gsp4Error, AssertionError):
    pass
