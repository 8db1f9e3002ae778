"""Exception types raised across PiteLens."""

from typing import List, Optional


class PiteLensError(Exception):
    """Base class for all PiteLens errors."""


class InvalidParameterError(PiteLensError, ValueError):
    """A parameter or input array violates an operation's preconditions."""


class RankDeficiencyError(InvalidParameterError):
    """Least squares design is rank deficient (e.g. OLS with n <= p)."""


class ArmFitError(PiteLensError):
    """A learner failed on one treatment arm."""

    def __init__(self, arm: str, cause: Exception):
        self.arm = arm
        self.cause = cause
        super().__init__(f"{arm} arm: {cause}")


class ConfigValidationError(PiteLensError):
    """Run configuration failed schema validation."""

    def __init__(self, errors: List[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class IdentityViolationError(PiteLensError):
    """A metric identity or bound did not hold."""

    def __init__(self, identity: str, message: Optional[str] = None):
        self.identity = identity
        super().__init__(message or f"identity violated: {identity}")


class ResultsIOError(PiteLensError):
    """Results or config files are missing, unreadable or corrupt."""
