"""Exception hierarchy shared by the solvers."""


class FreeboundError(Exception):
    """Base class for all package errors."""


class DomainError(FreeboundError, ValueError):
    """Invalid or under-resolved domain."""


class LinearSolveError(FreeboundError):
    def __init__(self, message, iterations, residual):
        super().__init__(f"{message} (iterations={iterations}, residual={residual:.3e})")
        self.iterations = iterations
        self.residual = residual


class PicardDivergence(FreeboundError):
    def __init__(self, message, history=()):
        super().__init__(message)
        self.history = list(history)


class NegativeAlphaRegime(FreeboundError):
    """No solution with alpha >= 0 exists on the tracked branch."""

    def __init__(self, message, alpha=None):
        super().__init__(message)
        self.alpha = alpha


class RadialShootingError(FreeboundError):
    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class ConvergenceError(FreeboundError):
    """An iteration hit its cap before reaching tolerance."""

    def __init__(self, message, history=()):
        super().__init__(message)
        self.history = list(history)
