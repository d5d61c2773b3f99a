"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration value or inconsistent parameter combination."""


class DomainError(ValueError):
    """Input outside the mathematical domain of an operation."""


class ContractViolation(ValueError):
    """Caller broke an interface precondition (shapes, kinds, symmetry)."""


class EstimationError(RuntimeError):
    """An estimation stage could not produce the requested output.

    Carries optional diagnostics so Monte-Carlo drivers can log failures
    instead of losing them.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics
