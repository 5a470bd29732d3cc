class PlatformError(Exception):
    """Base class for platform adapter failures."""


class PlatformValidationError(PlatformError, ValueError):
    """Request violates a platform invariant (dangling parent, unknown target)."""


class DuplicateVoteError(PlatformError):
    """The (voter, target) pair already holds a vote."""


class PublishError(PlatformError):
    """The platform answered with a non-success status."""

    def __init__(self, message, status=None):
        self.status = status
        super().__init__(message)


class PlatformTransportError(PlatformError):
    """The platform could not be reached; the run cannot continue."""


class ToolAuthorizationError(PlatformError, PermissionError):
    """Caller invoked a tool it was not provisioned with."""
