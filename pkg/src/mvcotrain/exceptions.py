"""Exception types shared across the package."""


class ShapeError(ValueError):
    """Operands or parameters have incompatible shapes."""


class DataError(ValueError):
    """A dataset file is missing, malformed, or inconsistent.

    Carries the offending path and (1-based) line number when known, and
    prefixes them to the message so errors point at the exact location.
    """

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        prefix = ""
        if path is not None:
            prefix = f"{path}: " if line is None else f"{path}:{line}: "
        super().__init__(prefix + message)


class StateError(RuntimeError):
    """An operation was invoked out of order or on missing state."""
