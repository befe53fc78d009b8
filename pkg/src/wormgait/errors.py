"""Exception types shared across the package."""


class WormgaitError(Exception):
    """Base class for all library errors."""


class ParameterError(WormgaitError, ValueError):
    """Invalid physical or numerical parameters."""


class EventBoundaryError(WormgaitError):
    """A sign triple was queried exactly on a velocity zero crossing."""


class HorizonExceededError(WormgaitError):
    """No velocity zero crossing occurs within the supplied horizon."""


class ModeSequenceError(WormgaitError):
    """The simulated mode sequence deviates from the gait sequence 1..6."""

    def __init__(self, message, t=None, signs=None):
        super().__init__(message)
        self.t = t
        self.signs = signs


class InfeasibleRegionError(WormgaitError):
    """An operation required a non-empty feasible region."""


class InfeasibleTargetsError(WormgaitError):
    """A cumulative-force boundary target violates its min/max envelope."""

    def __init__(self, message, violated=None):
        super().__init__(message)
        self.violated = violated or []


class InfeasibleExcursionError(WormgaitError):
    """The requested excursion cannot be met by any admissible profile."""

    def __init__(self, message, required=None, achievable=None):
        super().__init__(message)
        self.required = required
        self.achievable = achievable


class AllCellsInfeasibleError(WormgaitError):
    """Every cell of a sweep grid was infeasible."""


class ConfigError(WormgaitError, ValueError):
    """Malformed or physically inconsistent run configuration."""
