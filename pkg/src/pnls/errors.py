"""Exception hierarchy shared by the toolkit."""


class ISTError(Exception):
    """Base class for every error raised by :mod:`pnls`."""


class InvalidFieldError(ISTError, ValueError):
    pass


class DomainError(ISTError, ValueError):
    pass


class TruncationError(ISTError):
    """Potential does not decay at the edges of its grid."""


class IntegratorFailure(ISTError):
    pass


class DegenerateEntryError(ISTError):
    pass


class AliasingError(ISTError):
    pass


class SolverFailure(ISTError):
    """Krylov solve did not reach tolerance.

    ``residual_history`` holds the residual norms seen during the solve.
    """

    def __init__(self, message, residual_history=()):
        super().__init__(message)
        self.residual_history = list(residual_history)


class FEvaluationError(ISTError):
    def __init__(self, message, t, y):
        super().__init__(f"{message} (t={t:g}, y={y:g})")
        self.t = t
        self.y = y


class InstabilityError(ISTError):
    """Monitored norms left the admissible region; carries the partial trajectory."""

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class StepSizeError(ISTError, ValueError):
    pass


class DegenerateFitError(ISTError, ValueError):
    pass
