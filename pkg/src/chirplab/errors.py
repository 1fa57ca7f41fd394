"""Exception types raised across chirplab."""


class ChirpLabError(Exception):
    """Base class for library errors."""


class DomainValidationError(ChirpLabError, ValueError):
    """An input lies outside the valid domain (wall cell, start == goal, ...)."""


class ShapeError(ChirpLabError, ValueError):
    pass


class ConfigError(ChirpLabError, ValueError):
    pass


class RequestTooLargeError(ChirpLabError, ValueError):
    pass


class CalculabilityError(ChirpLabError):
    """A source policy cannot be executed in every state of the target MDP."""


class DegenerateMdpError(ChirpLabError, ArithmeticError):
    """All policies are (numerically) equal-valued in the target MDP."""


class ExactnessUnavailableError(ChirpLabError):
    """Exact CHIRP needs deterministic transitions in both MDPs."""


class ConvergenceError(ChirpLabError, RuntimeError):
    pass


class UndefinedCorrelationError(ChirpLabError, ArithmeticError):
    pass
