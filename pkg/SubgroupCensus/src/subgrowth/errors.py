"""Exception hierarchy shared by every subgrowth module."""

from __future__ import annotations

from typing import Any, Optional


class SubgrowthError(Exception):
    """Base class for all library errors."""


class InvalidArgument(SubgrowthError, ValueError):
    """A precondition on the inputs does not hold."""


class ResourceLimitExceeded(SubgrowthError, RuntimeError):
    """A configured cap or search budget was exceeded.

    ``partial`` carries whatever was computed before giving up (best witness
    so far, finished moduli, ...). It is JSON-friendly so the CLI can put it
    straight into the error envelope.
    """

    def __init__(self, message: str, partial: Optional[Any] = None):
        super().__init__(message)
        self.partial = partial


class PartialCensus(ResourceLimitExceeded):
    """gamma_n ran into the group-order cap before reaching the last modulus."""


class NoBombieriPrime(SubgrowthError):
    def __init__(self, message: str, diagnostics: Optional[Any] = None):
        super().__init__(message)
        self.diagnostics = diagnostics


class CacheFormatError(SubgrowthError, ValueError):
    """Sieve cache file failed header or size validation."""
