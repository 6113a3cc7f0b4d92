"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Operands have incompatible lengths or shapes."""


class NumericError(ValueError):
    """A value that must be finite is NaN or infinite."""


class DomainError(ValueError):
    """An input is outside the mathematical domain of the operation."""


class UsageError(RuntimeError):
    """The API was called with mismatched or stale objects."""


class ValidationError(ValueError):
    """A config field failed validation. ``field`` names the offender."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")
