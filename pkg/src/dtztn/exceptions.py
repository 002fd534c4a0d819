"""Exception types raised across the package."""


class ParameterError(ValueError):
    """An argument or hyperparameter is outside its valid domain."""


class DegenerateRange(ValueError):
    """Min-max scaling requested on a series with zero spread."""


class InsufficientData(ValueError):
    """Not enough samples/steps to perform the requested operation."""


class ShapeError(ValueError):
    """Input sequence length does not match what the model expects."""


class StateError(RuntimeError):
    """An object is used before it has been fitted or configured."""


class IoError(OSError):
    """A persisted artifact could not be read or written."""


class ConfigError(ValueError):
    """Invalid scenario configuration; ``field`` holds the dotted path."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")
