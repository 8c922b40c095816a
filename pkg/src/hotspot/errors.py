"""Exception types raised across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class DegenerateEnsembleError(DomainError):
    """An ensemble has zero spread where a spread is required."""


class ForwardModelError(FloatingPointError):
    """A forward model returned a non-finite prediction."""

    def __init__(self, member, value):
        self.member = int(member)
        self.value = value
        super().__init__(f"forward model returned {value!r} for ensemble member {self.member}")


class ContractViolation(RuntimeError):
    """A caller broke an operation's precondition (e.g. an illegal action)."""


class ConfigError(ValueError):
    """A configuration value is inconsistent."""
