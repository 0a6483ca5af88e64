"""Exception types shared across the package."""


class PerpetuityError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(PerpetuityError, ValueError):
    """A value is outside the documented domain of an operation or law."""


class UnsupportedFamilyError(ParameterError):
    """The requested operation is not defined for this coefficient family."""


class ConfigurationError(PerpetuityError, ValueError):
    """Inconsistent or incomplete run configuration."""


class StatisticalError(PerpetuityError, RuntimeError):
    """A statistical procedure received no usable samples."""
