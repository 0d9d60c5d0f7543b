"""Exception hierarchy shared across the package."""


class DseError(Exception):
    """Base class for all errors raised by this package."""


class UnknownParamError(DseError):
    """A parameter name is missing from or absent in a space."""


class OutOfBoundsError(DseError):
    """A raw value lies outside its parameter bounds."""


class NonIntegralValueError(DseError):
    """An integer parameter received a non-integral value."""


class DimensionMismatchError(DseError):
    """A vector's dimension does not match the space or model."""


class GridTooLargeError(DseError):
    """A requested grid exceeds the configured size cap."""


class NotPositiveDefiniteError(DseError):
    """Covariance factorization failed even after the jitter schedule."""


class CacheMissingError(DseError):
    """A model operation requires fitted caches that are absent."""


class AllStartsFailedError(DseError):
    """Every hyperparameter-fit restart failed to factorize."""


class SpaceExhaustedError(DseError):
    """No unevaluated decodable point remains to propose."""


class ModeMismatchError(DseError):
    """An objective operation was called under the wrong mode."""


class UnknownMetricError(DseError):
    """A named metric is not present in a metric vector."""


class MissingReferenceError(DseError):
    """Scaling requires a reference that was not provided."""


class EmptySweepError(DseError):
    """A weight sweep was requested with no weight pairs."""


class UnknownBenchmarkError(DseError):
    """No synthetic benchmark is registered under that name."""


class UnresolvedPlaceholderError(DseError):
    """A script template placeholder could not be substituted."""


class AllInitFailedError(DseError):
    """No evaluation in the initial batch succeeded."""


class EmptyLogError(DseError):
    """The experiment log holds no successful evaluations."""


class ConfigError(DseError):
    """An experiment configuration failed validation."""

    def __init__(self, key_path: str, message: str):
        self.key_path = key_path
        super().__init__(f"{key_path}: {message}")
