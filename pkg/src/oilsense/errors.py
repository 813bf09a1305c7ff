"""Exception hierarchy. Each family maps to a distinct CLI exit code.

Exit code 2 is left to click for usage errors.
"""


class OilSenseError(Exception):
    exit_code = 1


class DomainError(OilSenseError, ValueError):
    """An argument is outside the domain an operation is defined on."""

    exit_code = 7


class ConfigError(OilSenseError):
    exit_code = 3


class SchemaError(OilSenseError):
    exit_code = 4


class NumericError(OilSenseError, ArithmeticError):
    exit_code = 5


class ConvergenceError(NumericError):
    pass


class DivergenceError(NumericError):
    def __init__(self, epoch, message=None):
        self.epoch = epoch
        super().__init__(message or f"training diverged at epoch {epoch}")


class ExtractionError(NumericError):
    def __init__(self, count, message=None):
        self.count = count
        super().__init__(message or f"expected exactly 2 qualifying dips, found {count}")


class BandEdgeError(NumericError):
    pass


class ArtifactIOError(OilSenseError, OSError):
    exit_code = 6
