"""Exception hierarchy.

Precondition violations derive from :class:`ValueError` as well, so callers
that only care about "bad input" can catch that. Numerical breakdowns derive
from :class:`NumericalFailure`; the CLI maps those to exit code 2.
"""


class BacklundError(Exception):
    """Base class for every error raised by this package."""


class NumericalFailure(BacklundError):
    """A computation ran but broke down (blow-up, no convergence, ...)."""


# grid / containers
class GridTooSmall(BacklundError, ValueError):
    pass


class GridMismatch(BacklundError, ValueError):
    pass


class WindowMismatch(BacklundError, ValueError):
    pass


class CarrierMismatch(BacklundError, ValueError):
    pass


class InvalidState(BacklundError, ValueError):
    pass


# construction
class DomainTooNarrow(BacklundError, ValueError):
    pass


class WindowTooNarrow(BacklundError, ValueError):
    pass


class CFLViolation(BacklundError, ValueError):
    pass


# dichotomy
class WrongCase(BacklundError, ValueError):
    pass


class NotOrthogonal(BacklundError, ValueError):
    """Data fails the Fredholm solvability condition of a Case-2 problem."""


class LogOverflow(NumericalFailure):
    """The log of an integrating factor left the representable range."""


# numerical failures
class Blowup(NumericalFailure):
    pass


class NoConvergence(NumericalFailure):
    pass


class LogDomain(NumericalFailure):
    """A Toda recursion needed the log of a non-positive number."""


class ResidualTooLarge(NumericalFailure):
    pass


class ConfigError(BacklundError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
