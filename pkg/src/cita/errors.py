"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """Raised when an argument violates a documented precondition."""


class DatasetIOError(OSError):
    """A file could not be read or written. The offending path is kept on ``path``."""

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = str(path)


class ImageFormatError(DatasetIOError):
    """The file decoded but its pixel format is not supported."""
