"""Conjugate Beta-Bernoulli inference over a controller's landing capability.

The posterior over the unknown success probability after ``S`` safe and ``F``
unsafe rollouts is ``Beta(alpha0 + S, beta0 + F)``.  Approval confidence is the
posterior mass above the reliability threshold ``p0``, which needs the
regularized incomplete beta function; that is evaluated here with a modified
Lentz continued fraction rather than delegated to a statistics package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from landing_approval.errors import NumericalError

CF_TOLERANCE = 1e-14
CF_MAX_ITERATIONS = 500
_TINY = 1e-300


@dataclass(frozen=True)
class BetaParams:
    """Shape pair of a Beta distribution over the landing capability."""

    alpha: float = 1.0
    beta: float = 1.0

    def __post_init__(self) -> None:
        for name in ("alpha", "beta"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be finite and > 0, got {value!r}")

    @property
    def mean(self) -> float:
        return self.alpha / (self.alpha + self.beta)

    @property
    def variance(self) -> float:
        total = self.alpha + self.beta
        return self.alpha * self.beta / (total * total * (total + 1.0))


@dataclass(frozen=True)
class CapabilitySummary:
    mean: float
    variance: float
    approval_probability: float
    false_approval_risk: float


def posterior_update(prior: BetaParams, successes: int, failures: int) -> BetaParams:
    """Add observed success and failure counts to the prior pseudo-counts."""
    if successes < 0 or failures < 0:
        raise ValueError("counts must be nonnegative")
    return BetaParams(prior.alpha + successes, prior.beta + failures)


def _continued_fraction(x: float, a: float, b: float) -> float:
    # Modified Lentz evaluation of the incomplete beta continued fraction.
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, CF_MAX_ITERATIONS + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < CF_TOLERANCE:
            return h
    raise NumericalError(
        f"incomplete beta continued fraction did not converge for x={x}, a={a}, b={b}"
    )


def _check_domain(x: float, a: float, b: float) -> None:
    if not (0.0 <= x <= 1.0):
        raise ValueError(f"x must lie in [0, 1], got {x!r}")
    if not (a > 0 and b > 0 and math.isfinite(a) and math.isfinite(b)):
        raise ValueError(f"shape parameters must be finite and > 0, got a={a!r}, b={b!r}")


def _incomplete_beta_pair(x: float, a: float, b: float) -> tuple[float, float]:
    """Return ``(I_x(a, b), 1 - I_x(a, b))`` with the smaller tail computed directly."""
    _check_domain(x, a, b)
    if x == 0.0:
        return 0.0, 1.0
    if x == 1.0:
        return 1.0, 0.0
    log_front = (
        a * math.log(x)
        + b * math.log1p(-x)
        - (math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b))
    )
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        lower = front * _continued_fraction(x, a, b) / a
        return lower, 1.0 - lower
    upper = front * _continued_fraction(1.0 - x, b, a) / b
    return 1.0 - upper, upper


def regularized_incomplete_beta(x: float, a: float, b: float) -> float:
    """Beta(a, b) cumulative distribution function evaluated at ``x``.

    Raises ``ValueError`` outside ``x in [0, 1]``, ``a, b > 0``.
    """
    return _incomplete_beta_pair(float(x), float(a), float(b))[0]


def _check_threshold(p0: float) -> None:
    if not (0.0 < p0 < 1.0):
        raise ValueError(f"reliability threshold must lie in (0, 1), got {p0!r}")


@lru_cache(maxsize=65536)
def _approval_pair(alpha: float, beta: float, p0: float) -> tuple[float, float]:
    cdf, upper = _incomplete_beta_pair(p0, alpha, beta)
    return upper, cdf


def approval_probability(posterior: BetaParams, p0: float) -> float:
    """Posterior probability that the true capability is at least ``p0``."""
    _check_threshold(p0)
    return _approval_pair(posterior.alpha, posterior.beta, float(p0))[0]


def false_approval_risk(posterior: BetaParams, p0: float) -> float:
    """Posterior probability that the capability falls below ``p0``; ``1 - q``."""
    return 1.0 - approval_probability(posterior, p0)


def capability_summary(posterior: BetaParams, p0: float) -> CapabilitySummary:
    q = approval_probability(posterior, p0)
    return CapabilitySummary(
        mean=posterior.mean,
        variance=posterior.variance,
        approval_probability=q,
        false_approval_risk=1.0 - q,
    )
