"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes: config/domain problems exit 2,
budget overruns exit 3, regression mismatches exit 4.
"""


class PinlabError(Exception):
    """Base class for all package errors."""


class DomainError(PinlabError, ValueError):
    """An argument is outside an operation's documented domain."""


class ResolutionError(DomainError):
    """A grid or quadrature is too coarse to resolve the requested scale."""


class CoverageError(PinlabError):
    """A grid fails to cover the support it is supposed to integrate."""


class BudgetError(PinlabError):
    """A computation would exceed its configured resource budget."""


class ConfigError(PinlabError):
    """An experiment configuration file is missing, malformed, or invalid."""


class RegressionMismatch(PinlabError):
    """Computed results disagree with previously frozen golden values."""

    def __init__(self, message, diff_rows=None):
        super().__init__(message)
        self.diff_rows = diff_rows or []
