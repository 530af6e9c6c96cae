"""Exception hierarchy shared by every module of the package."""


class OneBitVarError(Exception):
    """Base class for all package errors."""


class NumericalError(OneBitVarError):
    """A numerical routine could not produce a trustworthy answer."""


class SingularMatrix(NumericalError):
    pass


class NotSymmetric(NumericalError):
    pass


class NoConvergence(NumericalError):
    pass


class NotPositiveDefinite(NumericalError):
    pass


class NotStationary(NumericalError):
    pass


class SingularSystem(NumericalError):
    """The block Yule-Walker system is singular or badly conditioned."""


class DomainError(OneBitVarError, ValueError):
    """An argument lies outside the mathematical domain of a function."""


class ZeroThreshold(OneBitVarError, ValueError):
    pass


class MissingEdge(OneBitVarError, ValueError):
    pass


class GenerationTimeout(OneBitVarError):
    pass


class ConfigError(OneBitVarError, ValueError):
    pass


class FormatError(OneBitVarError, ValueError):
    """Malformed model JSON or BITVAR1 record file."""
