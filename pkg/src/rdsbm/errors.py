"""Exception types raised by the estimators."""


class EstimationError(Exception):
    """Base class for numerical estimation failures."""


class EmptyClassError(EstimationError):
    """A class has zero members, so the estimate is undefined for it."""


class NoValidRootError(EstimationError):
    """The de-biasing quadratic has no root inside [0, 1]."""


class NonConvergenceError(EstimationError):
    """An iterative solver stopped above its acceptance tolerance.

    The best point found is attached as ``best_point`` together with its
    residual so callers can inspect or reuse it.
    """

    def __init__(self, message, best_point=None, residual=None):
        super().__init__(message)
        self.best_point = best_point
        self.residual = residual
