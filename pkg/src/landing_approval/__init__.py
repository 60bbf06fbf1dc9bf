"""Bayesian deployment approval for landing controllers from finite rollout evidence."""

from landing_approval.beta import (
    BetaParams,
    CapabilitySummary,
    approval_probability,
    capability_summary,
    false_approval_risk,
    posterior_update,
    regularized_incomplete_beta,
)
from landing_approval.sequential import (
    Decision,
    SessionStatus,
    ValidationConfig,
    ValidationSession,
    empirical_rule,
    stopping_time,
    validation_saving,
)

__all__ = [
    "BetaParams",
    "CapabilitySummary",
    "Decision",
    "SessionStatus",
    "ValidationConfig",
    "ValidationSession",
    "approval_probability",
    "capability_summary",
    "empirical_rule",
    "false_approval_risk",
    "posterior_update",
    "regularized_incomplete_beta",
    "stopping_time",
    "validation_saving",
]

__version__ = "0.1.0"
