"""Exception types shared across the package."""


class ModebellError(Exception):
    """Base class for errors raised by this package."""


class ValidationError(ModebellError, ValueError):
    """Raised when an input violates a documented precondition."""


class EstimationError(ModebellError, RuntimeError):
    """Raised when a statistical estimate cannot be formed from the data."""


class FitError(ModebellError, RuntimeError):
    """Raised when a least-squares fit fails to converge or is ill posed."""
