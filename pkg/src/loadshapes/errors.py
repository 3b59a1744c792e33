"""Exception types shared across the package."""


class LoadShapesError(Exception):
    """Base class for all errors raised by this package."""


class DataError(LoadShapesError):
    """Malformed or inconsistent input data (files, rows, vocabularies)."""


class ConfigError(LoadShapesError):
    """Invalid configuration: bad parameter values or combinations."""


class DegenerateProfileError(LoadShapesError):
    """A profile cannot be normalized (zero vector under the chosen method)."""


class CoincidentCentroidsError(LoadShapesError):
    """Two cluster centroids coincide, making a ratio-based index undefined."""


class MetricError(LoadShapesError):
    """A metric is undefined for the given partition (e.g. a single cluster)."""
