class SitmarkError(Exception):
    """Base class for toolkit errors."""


class DomainError(SitmarkError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ValidationError(SitmarkError, ValueError):
    """Input data or configuration failed validation."""
