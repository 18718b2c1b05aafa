class SymfloqError(ValueError):
    """Base error for symfloq computations"""


class InvalidParamsError(SymfloqError):
    """Parameter outside its documented domain"""


class DimensionMismatchError(SymfloqError):
    """State, operator or basis sizes disagree"""


class NormalizationError(SymfloqError):
    """State norm deviates from one"""


class LeakageError(SymfloqError):
    """Floquet operator couples the two parity blocks"""


class InvalidDensityMatrixError(SymfloqError):
    """Density matrix is not Hermitian, unit-trace or positive"""


class UnsupportedModelError(SymfloqError):
    """No closed-form or printed reference exists for the requested model"""


class PeriodNotFoundError(SymfloqError):
    """Exact-period averaging requested but no period was detected"""
