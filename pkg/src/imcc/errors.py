"""Exception taxonomy.

Three top-level families map onto the CLI exit codes:
ConfigurationError -> 1 (usage), DataError -> 2 (data), NumericalError -> 3.
"""


class ImccError(Exception):
    """Base class for all library errors."""


class ConfigurationError(ImccError):
    """Invalid parameter or option combination (usage error)."""


class DataError(ImccError):
    """Problem with input data."""


class ParseError(DataError):
    """Malformed input file."""

    def __init__(self, message, path=None, line=None):
        loc = ""
        if path is not None:
            loc += f"{path}"
        if line is not None:
            loc += f":{line}"
        super().__init__(f"{loc}: {message}" if loc else message)
        self.path = path
        self.line = line


class ValidationError(DataError):
    """Input values violate a documented contract."""


class UnsupportedFeatureError(DataError):
    """Input uses a feature type the library does not handle."""


class DegenerateDataError(DataError):
    """Data admits no meaningful answer (e.g. all instances identical)."""


class UndefinedMetricError(DataError):
    """Every instance was skipped; the metric denominator is empty."""


class NumericalError(ImccError):
    """Linear algebra failed (singular or ill-conditioned system)."""


class DegenerateStatisticError(NumericalError):
    """Test statistic undefined (e.g. perfectly consistent rankings)."""
