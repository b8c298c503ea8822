"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Input violates a documented precondition or invariant."""


class FileFormatError(ValueError):
    """An input file does not parse as its documented format."""
