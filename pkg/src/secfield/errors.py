"""Exception hierarchy shared by all secfield modules.

The CLI maps these onto exit codes: usage/config problems exit with 2,
numerical failures with 3 and file problems with 4.
"""


class SecFieldError(Exception):
    """Base class for every error raised by secfield."""

    exit_code = 3


class InvalidArgumentError(SecFieldError, ValueError):
    exit_code = 2


class ConfigError(SecFieldError, ValueError):
    exit_code = 2


class ParseError(SecFieldError, ValueError):
    """Malformed training-set or model file."""

    exit_code = 4

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class SchemaError(ParseError):
    """Document carries an unknown or missing schema version."""


class DegenerateInputError(SecFieldError, ValueError):
    exit_code = 3


class NumericError(SecFieldError, ArithmeticError):
    exit_code = 3


class OutOfRangeError(NumericError):
    """Query point too far from the data for the kernel to resolve."""


class DivergenceError(NumericError):
    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class SingularJacobianError(NumericError):
    pass


class NonConvergenceError(NumericError):
    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class UndefinedMetricError(NumericError):
    pass
