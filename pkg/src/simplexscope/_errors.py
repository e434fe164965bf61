"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """Arguments violate an operation's preconditions."""


class DegenerateInputError(InvalidInputError):
    """Input is well formed but the requested quantity is undefined for it
    (e.g. a similarity ratio against the zero vector)."""


class ResourceLimitError(RuntimeError):
    """An exhaustive enumeration would exceed the configured size cap."""
