"""Exception hierarchy shared by the numerical modules and the CLI."""


class ExpSumError(Exception):
    """Base class for all library errors."""


class DomainError(ExpSumError, ValueError):
    """An argument lies outside the domain of the function."""


class ConvergenceError(ExpSumError, ArithmeticError):
    """A series or quadrature exhausted its budget before converging."""


class DuplicateNodeError(DomainError):
    """Distinct-node divided differences were given repeated nodes."""


class NearCoincidentError(DomainError):
    """Two rates are distinct but closer than the regrouping gap."""


class DimensionError(DomainError):
    """Array arguments have inconsistent or unsupported dimensions."""
