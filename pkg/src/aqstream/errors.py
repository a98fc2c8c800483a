"""Exception types shared across the package."""


class ConfigurationError(Exception):
    """Invalid catalog, pattern, or run configuration. Fatal (exit code 1)."""


class CsvFormatError(Exception):
    """A CSV file is structurally unusable (e.g. required header missing)."""


class UnitError(ValueError):
    """Unknown unit, unit mismatch, or unsupported unit pair."""


class InsufficientDataError(Exception):
    """Not enough data to compute the requested result (exit code 2)."""


class CorrelationUndefinedError(InsufficientDataError):
    """Pearson correlation is undefined (fewer than two pairs or zero variance)."""
