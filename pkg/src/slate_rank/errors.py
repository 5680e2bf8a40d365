"""Exception taxonomy shared across the package.

Exit-code mapping lives in the CLI: ConfigError/UsageError/DataError/
ShapeError -> 2, TrainingError/MetricError -> 3.
"""


class SlateRankError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(SlateRankError):
    """Tensor dimension mismatch."""


class ConfigError(SlateRankError):
    """Invalid configuration value or unknown option."""


class DataError(SlateRankError):
    """Malformed input data or label outside its contract."""


class UsageError(SlateRankError):
    """API called outside its precondition."""


class TrainingError(SlateRankError):
    """Numeric failure during optimization (NaN gradients, diverged loss)."""


class MetricError(SlateRankError):
    """Metric undefined for the given inputs (e.g. single-class AUC)."""
