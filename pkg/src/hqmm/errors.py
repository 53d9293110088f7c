"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class HqmmError(Exception):
    """Base class for all package errors."""


class DomainError(HqmmError, ValueError):
    """A scalar parameter lies outside its allowed range."""


class ValidationError(HqmmError, ValueError):
    """A matrix argument violates a stochasticity or completeness constraint."""


class ContractError(HqmmError, ValueError):
    """Arguments are individually valid but inconsistent with each other."""


class ConsistencyError(HqmmError, RuntimeError):
    """An internal numerical invariant was violated beyond its tolerance."""
