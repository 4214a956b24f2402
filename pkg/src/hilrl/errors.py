"""Shared exception types."""


class ConfigError(ValueError):
    """Raised for invalid configuration values (dimensions, probabilities, ...)."""


class ContractViolation(RuntimeError):
    """Raised when a caller breaks an operation's precondition."""


class GenerationError(RuntimeError):
    """Raised when random layout generation exhausts its retry budget."""
