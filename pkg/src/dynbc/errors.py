"""Exception types shared across the package."""


class DynbcError(Exception):
    """Base class for all package errors."""


class ExprSyntaxError(DynbcError):
    """Malformed expression text; carries the byte offset of the problem."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class UnknownIdentifier(ExprSyntaxError):
    """Identifier outside the allowed symbol/function set."""


class DomainError(DynbcError):
    """Evaluation left the real domain (log/sqrt of a negative, division by zero)."""

    def __init__(self, message: str, node=None):
        super().__init__(message)
        self.node = node


class DegenerateGrid(DynbcError):
    """Grid too small for the requested operation."""


class ConditionViolated(DynbcError):
    """A structural hypothesis fails (e.g. a slope-budget integral converges short)."""


class PreconditionFailed(DynbcError):
    """Caller broke a documented precondition."""


class ConfigError(DynbcError):
    """Invalid solver or run configuration."""


class CertificateMismatch(DynbcError):
    """Certificate does not cover the solution it is asked to verify."""


class DivergentIntegral(DynbcError):
    """An integral required to converge was classified as divergent."""
