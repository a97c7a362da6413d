"""Exception types shared across the package."""


class RplTaguchiError(Exception):
    """Base class for all package errors."""


class InvalidDesignError(RplTaguchiError, ValueError):
    """A factor set or design matrix violates a structural requirement."""


class NoFeasibleArrayError(RplTaguchiError, LookupError):
    """No catalog array can host the requested factors."""


class UnknownFactorError(RplTaguchiError, KeyError):
    """A factor label was not found in the design."""


class InvalidInputError(RplTaguchiError, ValueError):
    """A numeric input is empty, misaligned, or non-finite."""


class DomainError(RplTaguchiError, ValueError):
    """A value lies outside the mathematical domain of an operation."""


class DecompositionError(RplTaguchiError, ArithmeticError):
    """Factor sums of squares exceed the total beyond tolerance."""


class SaturatedDesignError(RplTaguchiError, ZeroDivisionError):
    """No residual degrees of freedom remain for an F test."""


class UndefinedContributionError(RplTaguchiError, ZeroDivisionError):
    """Percent contribution is undefined because the total SS is zero."""


class ConfigError(RplTaguchiError, ValueError):
    """A simulation configuration value is out of range."""


class AccountingError(RplTaguchiError, ArithmeticError):
    """Per-state times fail to add up to the simulated duration."""


class InvariantViolationError(RplTaguchiError, AssertionError):
    """A runtime self-check of the simulation state failed."""


class ExperimentSpecError(RplTaguchiError, ValueError):
    """An experiment spec file is malformed or inconsistent."""
