"""Exception hierarchy shared by the library and the CLI."""


class LandingApprovalError(Exception):
    """Base class for all package errors."""


class ConfigError(LandingApprovalError, ValueError):
    """Invalid configuration value or inconsistent ranges."""


class UsageError(LandingApprovalError, RuntimeError):
    """An operation was called in a state that does not permit it."""


class NumericalError(LandingApprovalError, ArithmeticError):
    """A numerical routine failed to converge or produced a non-finite value."""


class RolloutError(LandingApprovalError, RuntimeError):
    """A controller failed while being evaluated during a rollout.

    Distinct from an unsafe outcome: the rollout produced no evidence.
    """
