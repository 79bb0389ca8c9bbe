"""Shared exception types.

Exit-code mapping used by the CLI: configuration / hypothesis / domain
problems are "the inputs are wrong" (exit 2); a genuine inequality
violation discovered by a check is exit 1.
"""


class EstimateLabError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(EstimateLabError):
    """Malformed or inconsistent run configuration."""


class DomainError(EstimateLabError):
    """An argument lies outside the mathematical domain of an operation."""


class HypothesisError(EstimateLabError):
    """Structural hypotheses on the nonlinearity fail on the given range."""


class PositivityError(EstimateLabError):
    """A solution field leaves the admissible range (0, M]."""


class BlowUpError(EstimateLabError):
    """A forward solve left the admissible range mid-integration."""


class StencilError(EstimateLabError):
    """A finite-difference stencil does not fit (boundary node, coarse grid)."""


class NumericalError(EstimateLabError):
    """A numerical routine failed to converge to its requested tolerance."""
