"""Exception hierarchy shared across the package.

Every failure mode that callers are expected to branch on gets its own
class; the CLI maps these onto process exit codes.
"""

from __future__ import annotations


class HmcLabError(Exception):
    """Base class for all package-specific errors."""


class ConfigurationError(HmcLabError):
    """A parameter or configuration value is invalid."""


class ConfigValidationError(ConfigurationError):
    """Config-file validation failed; carries the full list of problems."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class NumericError(HmcLabError):
    """A numeric quantity became non-finite where finiteness is required.

    ``context`` carries the offending state or value for post-mortem use.
    """

    def __init__(self, message: str, context: object = None):
        self.context = context
        super().__init__(message)


class CapabilityError(HmcLabError):
    """The model lacks an evaluator (Hessian action, third derivative)."""


class OracleError(HmcLabError):
    """A reference computation (high-order ODE solve) did not converge."""


class InsufficientDataError(HmcLabError):
    """Too few samples for the requested statistic."""


class ExperimentCheckError(HmcLabError):
    """A declared experiment-level check failed."""
