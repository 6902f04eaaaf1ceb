"""Exception types shared across the package."""


class LifecycleError(Exception):
    """Base class for all package errors."""


class DomainError(LifecycleError):
    """An argument is outside the mathematical domain of an operation."""


class CapabilityError(LifecycleError):
    """The request is valid but exceeds what this implementation can compute."""


class SimulationError(LifecycleError):
    """A policy or simulation produced an unusable value."""


class SequenceError(LifecycleError):
    """A submission arrived for a (round, period) that is not currently open."""


class ValidationError(LifecycleError):
    """User-supplied input failed validation.

    ``fields`` lists the offending field names when applicable.
    """

    def __init__(self, message: str, fields: list[str] | None = None):
        super().__init__(message)
        self.fields = fields or []


class ConflictError(LifecycleError):
    """The request conflicts with existing state (e.g. duplicate participant)."""


class StateError(LifecycleError):
    """The session or study is not in a phase where this operation is allowed."""


class DataError(LifecycleError):
    """Analysis input data is missing, empty, or malformed."""
