"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class CohilbertError(Exception):
    exit_code = 1


class DomainError(CohilbertError, ValueError):
    """Argument outside the domain where the quantity is defined."""

    exit_code = 2


class ConfigError(CohilbertError, ValueError):
    exit_code = 2


class CharacteristicValueError(CohilbertError, ArithmeticError):
    """The Fredholm determinant is (numerically) zero at the requested parameter."""

    exit_code = 3

    def __init__(self, message, lam=None, det=None):
        super().__init__(message)
        self.lam = lam
        self.det = det


class TailError(CohilbertError, ArithmeticError):
    """Integrand along the Bromwich line has not decayed at the truncation point."""

    exit_code = 4


class OutputError(CohilbertError, OSError):
    exit_code = 5
