"""Exception types shared across the package."""


class NetPricingError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(NetPricingError):
    """An instance document is syntactically malformed."""


class ValidationError(NetPricingError):
    """Structurally well-formed data violates a model invariant."""


class GenerationError(NetPricingError):
    """Random instance generation cannot satisfy its constraints."""


class LpFailure(NetPricingError):
    """The LP engine failed numerically; no trustworthy answer exists."""


class BudgetExceeded(NetPricingError):
    """An enumeration would exceed its configured work budget."""
