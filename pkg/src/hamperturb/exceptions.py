"""Exception types shared across the package."""


class HamPerturbError(Exception):
    """Base class."""


class InvalidDimensionError(HamPerturbError, ValueError):
    pass


class EvaluationError(HamPerturbError):
    def __init__(self, message, x=None):
        super().__init__(message if x is None else f"{message} at x={x!r}")
        self.x = x


class SymplecticityError(HamPerturbError, ValueError):
    pass


class IntegrationError(HamPerturbError):
    def __init__(self, message, last_state=None, last_time=None):
        super().__init__(message)
        self.last_state = last_state
        self.last_time = last_time


class ConvergenceError(HamPerturbError):
    def __init__(self, message, history=()):
        super().__init__(message)
        self.history = list(history)


class HypothesisViolation(HamPerturbError):
    """A mathematical precondition (neat time, non-degeneracy, ...) fails."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class TangencyError(HamPerturbError):
    pass


class ConstructionError(HamPerturbError):
    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class UncontrollableError(HamPerturbError):
    def __init__(self, message, null_directions=None, singular_values=None):
        super().__init__(message)
        self.null_directions = null_directions
        self.singular_values = singular_values


class TransportError(HamPerturbError):
    pass
