"""Exception types raised across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class RegimeError(ValueError):
    """A closed-form construction was requested outside the angle range where it applies."""


class StateValidationError(ValueError):
    """A state vector failed a structural check (length, finiteness, normalization)."""


class InfeasibleError(ValueError):
    """The requested discrimination task has no feasible measurement."""


class NonConvergenceError(RuntimeError):
    """A numerical solve stopped before its optimality certificate reached tolerance."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result
