"""Error taxonomy shared by all engines.

The CLI maps these onto its exit-code contract: configuration/domain
problems exit 2, infeasible computations exit 3, verification failures
exit 1.
"""


class RlabError(Exception):
    """Base class for all rlab errors."""


class ConfigurationError(RlabError, ValueError):
    """Missing or inconsistent parameters, files, or manifests."""


class DomainError(RlabError, ValueError):
    """An argument is outside the mathematical domain of an operation."""


class InfeasibleError(RlabError, RuntimeError):
    """The requested computation exceeds a configured resource cap."""
