"""Exception types raised across the package."""


class MabaError(ValueError):
    """Base class for all domain errors."""


class DegenerateTwist(MabaError):
    pass


class PoleAtCoincidence(MabaError):
    pass


class CapExceeded(MabaError):
    pass


class FormUndefined(MabaError):
    pass


class NotOnShell(MabaError):
    pass


class NoConvergence(MabaError):
    """Newton iteration exhausted its budget.

    The best iterate is kept on ``self.best`` (a ``BetheSolution``) so callers
    can inspect or restart from it.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class SingularJacobian(MabaError):
    pass
