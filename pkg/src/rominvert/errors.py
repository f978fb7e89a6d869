"""Exception hierarchy. Each family maps onto one CLI exit code."""


class RomInvertError(Exception):
    exit_code = 1


class ConfigError(RomInvertError, ValueError):
    exit_code = 2


class DataIOError(RomInvertError, OSError):
    exit_code = 3


class ParseError(RomInvertError, ValueError):
    exit_code = 4


class NumericError(RomInvertError, ArithmeticError):
    exit_code = 5


# windowing / series
class NonDivisible(ConfigError):
    pass


class WindowTooLong(ConfigError):
    pass


class ShapeMismatch(RomInvertError, ValueError):
    exit_code = 5


# vtk
class BadMagic(ParseError):
    pass


class BinaryUnsupported(ParseError):
    pass


class TruncatedSection(ParseError):
    pass


class UnknownDataset(ParseError):
    pass


class NoSuchArray(ParseError):
    pass


class NoMatchingPoint(ParseError):
    pass


class InconsistentSurfacePoint(ParseError):
    pass


# forward model
class DuplicateRate(ConfigError):
    pass


class NonUnitNormal(RomInvertError, ValueError):
    pass


# lstm / training
class DimensionMismatch(RomInvertError, ValueError):
    pass


class NonFiniteLoss(NumericError):
    pass


# mcmc
class NonPositiveVariance(NumericError, ValueError):
    pass


class LengthMismatch(RomInvertError, ValueError):
    pass


class BadParameters(ConfigError):
    pass


class ShortHistory(RomInvertError, ValueError):
    pass


class EmptyPostBurnIn(RomInvertError, ValueError):
    pass


class MissingCell(DataIOError):
    pass
