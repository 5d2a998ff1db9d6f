"""Shared exception types."""


class DomainError(ValueError):
    """Input outside the mathematical domain of an operation."""


class PreconditionError(ValueError):
    """A stated precondition of an operation is violated."""


class CertificationError(RuntimeError):
    """A doubling search or verification sweep failed; carries diagnostics."""

    def __init__(self, message, worst_point=None, worst_margin=None):
        super().__init__(message)
        self.worst_point = worst_point
        self.worst_margin = worst_margin


class NonConvergenceError(RuntimeError):
    """Newton iteration failed to reach tolerance; carries diagnostics."""

    def __init__(self, message, residual=None, worst_node=None):
        super().__init__(message)
        self.residual = residual
        self.worst_node = worst_node


class InsufficientRangeError(RuntimeError):
    """Radius window too narrow for a meaningful decay fit."""
