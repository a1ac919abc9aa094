"""Exception hierarchy.

``DomainError`` covers mathematically invalid requests (the CLI maps these to
exit code 2); ``InputError`` covers malformed input data (exit code 3).
"""


class SvPeriodError(Exception):
    pass


class DomainError(SvPeriodError):
    pass


class InputError(SvPeriodError, ValueError):
    pass


# quadrature
class PoleOnPath(DomainError):
    pass


class NonConvergent(DomainError):
    pass


class OverlappingPoles(DomainError):
    pass


class NotLogarithmic(DomainError):
    """A form with a higher-order pole was passed where simple poles are required."""


class NonIntegrableDetected(DomainError):
    pass


class UnboundedTestFunction(DomainError):
    pass


# geometry
class OverlappingDivisors(DomainError):
    pass


class DuplicatePoint(DomainError):
    pass


class NonGenericIntersection(DomainError):
    pass


class SingularMatrix(DomainError):
    pass


# forms
class FactorAbsent(DomainError):
    pass


class EqualEndpoints(DomainError):
    pass


class DivergentIndex(DomainError):
    pass


class OnSingularLocus(DomainError):
    pass


# svcore / heights / elliptic
class SingularPeriodMatrix(DomainError):
    pass


class DegenerateModulus(DomainError):
    pass


class NonZeroDegree(DomainError):
    pass


class OverlappingSupports(DomainError):
    pass


class NotConvergent(DomainError):
    """q-series requested outside the upper half plane."""
