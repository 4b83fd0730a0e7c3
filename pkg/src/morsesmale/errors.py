"""Exception hierarchy.

Errors split into two families: ``OutOfScope`` means the map under study is
not a Morse-Smale surface diffeomorphism (or is numerically indistinguishable
from one that is not), everything else is a usage/precondition error.
"""


class MorseSmaleError(Exception):
    pass


class OutOfScope(MorseSmaleError):
    """The map violates a structural assumption (hyperbolicity, transversality, no cycles)."""


class NoInverse(MorseSmaleError):
    pass


class ChartEscape(MorseSmaleError):
    pass


class NonOrientationPreserving(OutOfScope):
    pass


class NonHyperbolicOrbit(OutOfScope):
    pass


class TangencyDetected(OutOfScope):
    pass


class CycleDetected(OutOfScope):
    pass


class NotASaddle(MorseSmaleError):
    pass


class OutsideN(MorseSmaleError):
    pass


class ChartTooLarge(MorseSmaleError):
    pass


class DegenerateEigenframe(MorseSmaleError):
    pass


class TooShort(MorseSmaleError):
    pass


class NotTrapping(MorseSmaleError):
    pass


class NotInBasin(MorseSmaleError):
    pass


class ConfigError(MorseSmaleError):
    pass
