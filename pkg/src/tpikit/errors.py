"""Exception hierarchy. CLI exit codes are keyed off these classes."""


class TpiError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(TpiError, ValueError):
    """Invalid parameters or configuration."""


class InputError(TpiError, ValueError):
    """Malformed or inconsistent input data."""

    def __init__(self, message: str, *, path=None, line: int | None = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


class TransportError(TpiError):
    """HTTP failure that survived all retries."""


class ContentError(TpiError):
    """The endpoint answered, but the content is unusable."""


class IterationFailed(ContentError):
    """A single augmentation iteration produced no valid candidate."""


class UndefinedRatioError(TpiError, ZeroDivisionError):
    """Gap ratio requested with a (near) zero denominator."""


class DegenerateMatrixError(TpiError, ValueError):
    """A feature matrix has zero variance after centering."""
