"""Exception types raised by plstab."""


class PLStabError(Exception):
    """Base class for every error raised by this package."""


class ConcavityViolated(PLStabError, ValueError):
    pass


class InfiniteMass(PLStabError, ValueError):
    pass


class EmptyInput(PLStabError, ValueError):
    pass


class ZeroMass(PLStabError, ValueError):
    pass


class QuantileOutOfRange(PLStabError, ValueError):
    pass


class NonpositiveScale(PLStabError, ValueError):
    pass


class NonpositiveDerivative(PLStabError, ValueError):
    pass


class ToleranceNotReached(PLStabError, RuntimeError):
    pass


class DominationViolated(PLStabError, ValueError):
    pass


class DegenerateAtZ(PLStabError, ValueError):
    pass


class HypothesisNotMet(PLStabError, ValueError):
    pass


class NonintegrableTestFunction(PLStabError, ValueError):
    pass


class EpsilonOutOfRange(PLStabError, ValueError):
    """Deficit integral outside the range where the transport-cost bound applies."""


class EpsOutOfRange(PLStabError, ValueError):
    """Example parameter outside (0, 1/2)."""


class BaseNotEven(PLStabError, ValueError):
    pass


class UnknownSuite(PLStabError, KeyError):
    pass


class ParseError(PLStabError, ValueError):
    """Malformed density or triple file.

    ``line`` and ``field`` locate the problem when known.
    """

    def __init__(self, message, line=None, field=None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
