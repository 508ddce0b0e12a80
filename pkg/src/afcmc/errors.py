"""Exception hierarchy shared by every module of the package."""


class AFError(Exception):
    """Base class for domain errors (the CLI maps these to exit code 1)."""


class InvalidArgumentError(AFError, ValueError):
    pass


class OutOfDomainError(AFError, ValueError):
    """A point lies inside the radius where the asymptotic model is valid."""


class MeanNotZeroError(AFError, ValueError):
    pass


class MassZeroError(AFError, ArithmeticError):
    pass


class NotImmersedError(AFError, ArithmeticError):
    pass


class DivergedError(AFError, RuntimeError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ResolutionWarning(UserWarning):
    """A result is usable but some accuracy target was not met."""
