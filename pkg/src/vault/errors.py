"""Exception hierarchy shared across the framework."""


class VaultError(Exception):
    """Base class for all framework errors."""


class NotFoundError(VaultError):
    """A dataset, plugin, action, preset, or pool entry does not exist."""


class ShapeError(VaultError):
    """A payload's declared shape does not match its data."""


class ValidationError(VaultError):
    """An argument violates an operation's preconditions."""


class KindMismatchError(ValidationError):
    """Two typed objects (actions, payloads) have incompatible kinds."""


class PermissionDeniedError(VaultError):
    """An action's permission flags forbid the requested operation."""


class NameCollisionError(VaultError):
    """A unique name (pool entry, plugin id) is already taken."""


class FormatError(VaultError):
    """A file or document is malformed, truncated, or of unknown version."""


class WorkspaceLockedError(VaultError):
    """The loaded workspace is locked; layout mutation is refused."""
