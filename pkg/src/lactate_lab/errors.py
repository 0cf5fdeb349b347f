"""Exception hierarchy shared across the package."""


class LactateLabError(Exception):
    """Base class for all package errors."""


class DomainError(LactateLabError, ValueError):
    """An input lies outside the domain of an operation."""


class ConfigError(LactateLabError, ValueError):
    """A configuration value is invalid."""


class FitError(LactateLabError):
    """A curve fit could not be computed reliably."""


class NoDmaxPointError(LactateLabError):
    """The fitted curve never lies below the chord."""


class OutOfScopeError(DomainError):
    """Pace faster than the acceptable-error table covers."""


class FormatError(LactateLabError):
    """Malformed input file."""
