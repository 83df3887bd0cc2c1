"""Exception hierarchy shared across the package."""


class MultisenseError(Exception):
    """Base class for all library errors."""


class DimensionError(MultisenseError, ValueError):
    """Shapes do not agree."""


class ArgumentError(MultisenseError, ValueError):
    """An argument is out of its valid domain."""


class StateError(MultisenseError, RuntimeError):
    """An object was used in the wrong lifecycle state."""


class TrainingError(MultisenseError, RuntimeError):
    """Training diverged (non-finite loss)."""


class IngestionError(MultisenseError, IOError):
    """A dataset on disk is missing files or cannot be decoded."""


class FormatError(MultisenseError, ValueError):
    """A binary file is truncated or carries a bad header."""


class IncompatibilityError(MultisenseError, ValueError):
    """A checkpoint does not match the architecture it is loaded into."""


class ConfigError(MultisenseError, ValueError):
    """An experiment config failed to parse or validate."""
