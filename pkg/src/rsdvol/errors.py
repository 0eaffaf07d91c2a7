"""Exception hierarchy shared by every stage of the pipeline."""

from __future__ import annotations


class RsdVolError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(RsdVolError, ValueError):
    """Input data violates a record-level invariant."""


class ParseError(ValidationError):
    """Input could not be decoded; ``location`` names the offending line or record."""

    def __init__(self, message: str, location: str | None = None) -> None:
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)


class ConfigError(RsdVolError, ValueError):
    """A parameter is outside its declared range."""


class DomainError(RsdVolError, ValueError):
    """A numeric argument lies outside the domain of an operation."""


class ConsistencyError(RsdVolError):
    """Inputs that must derive from the same cohort do not agree."""
