"""Exception hierarchy. Each class maps to one CLI exit code."""


class OptPredictError(Exception):
    exit_code = 4


class InvalidArgumentError(OptPredictError, ValueError):
    exit_code = 2


class ConfigurationError(OptPredictError, ValueError):
    exit_code = 2


class InsufficientDataError(OptPredictError, ValueError):
    exit_code = 3


class DataError(OptPredictError, ValueError):
    exit_code = 3


class DegenerateVolatilityError(OptPredictError, ArithmeticError):
    """Raised when sigma*sqrt(dt) is too small for the d-terms to be finite."""

    exit_code = 4


class InternalError(OptPredictError, RuntimeError):
    exit_code = 4
