"""Exception types shared across the package."""


class FcazError(Exception):
    """Base class for all package errors."""


class ValidationError(FcazError, ValueError):
    """Invalid argument or violated precondition."""


class NetworkFormatError(FcazError):
    """Network file failed to parse against the documented schema."""


class NetworkValidationError(FcazError):
    """Parsed network violates a structural invariant."""


class DataSchemaError(FcazError):
    """Dataset, scenario, or prediction file does not match its schema."""


class InfeasibleError(FcazError):
    """No configuration satisfies the availability constraint."""
