"""Exception types shared across the package."""


class InputError(ValueError):
    """Malformed argument: wrong shape, non-finite entries, invalid parameters."""


class DomainError(ValueError):
    """A requested quantity is infinite or undefined for the given law."""


class ResourceError(RuntimeError):
    """A configured budget (proposals, support size) was exhausted."""

    def __init__(self, message, **info):
        super().__init__(message)
        self.info = info
