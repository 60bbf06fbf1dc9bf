"""Scripted landing controllers standing in for trained policy checkpoints.

``pd_family`` tracks the reference descent profile toward the pad with PD
loops whose gains shrink and whose action noise grows as ``quality`` drops.
``synthetic_bernoulli`` skips the dynamics entirely and emits outcomes with a
known success probability, which is what calibration experiments need.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, replace

import numpy as np

from landing_approval import rng
from landing_approval.errors import ConfigError, UsageError
from landing_approval.lander import (
    GRAVITY,
    MASS,
    MAX_THRUST,
    ControlInput,
    LanderState,
    RolloutOutcome,
    glide_rate,
)
from landing_approval.safety import SafetyThresholds, TouchdownRecord, evaluate_safety


class PolicyKind(str, enum.Enum):
    PD_FAMILY = "pd_family"
    SYNTHETIC_BERNOULLI = "synthetic_bernoulli"
    ZERO_THRUST = "zero_thrust"


@dataclass(frozen=True)
class PDGains:
    """Full-quality gains; frozen after Monte Carlo certification of the ladder."""

    kp_x: float = 1.0
    kd_x: float = 1.6
    kd_z: float = 3.0
    kp_theta: float = 6.0
    kd_theta: float = 2.5
    max_tilt: float = 0.35
    tilt_per_altitude: float = 0.4
    min_tilt: float = 0.04
    min_gain_fraction: float = 0.25
    thrust_noise: float = 0.29
    noise_exponent: float = 0.3
    elevator_noise: float = 0.58


DEFAULT_GAINS = PDGains()


@dataclass(frozen=True)
class PolicySpec:
    kind: PolicyKind = PolicyKind.PD_FAMILY
    quality: float = 1.0
    true_p: float = 1.0
    noise_seed_offset: int = 0
    label: str = ""
    gains: PDGains = DEFAULT_GAINS

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", PolicyKind(self.kind))
        if isinstance(self.gains, dict):
            object.__setattr__(self, "gains", PDGains(**self.gains))
        if self.kind is PolicyKind.PD_FAMILY and not (0.0 <= self.quality <= 1.0):
            raise ConfigError(f"quality must lie in [0, 1], got {self.quality}")
        if self.kind is PolicyKind.SYNTHETIC_BERNOULLI and not (0.0 <= self.true_p <= 1.0):
            raise ConfigError(f"true_p must lie in [0, 1], got {self.true_p}")

    @property
    def name(self) -> str:
        if self.label:
            return self.label
        if self.kind is PolicyKind.PD_FAMILY:
            return f"pd-q{self.quality:.4f}"
        if self.kind is PolicyKind.SYNTHETIC_BERNOULLI:
            return f"synthetic-p{self.true_p:.4f}"
        return "zero-thrust"

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "quality": self.quality,
            "true_p": self.true_p,
            "noise_seed_offset": self.noise_seed_offset,
            "label": self.label,
            "gains": asdict(self.gains),
        }

    @classmethod
    def from_dict(cls, data: dict) -> PolicySpec:
        try:
            return cls(**data)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad policy spec {data!r}: {exc}") from exc


def policy_keys(spec: PolicySpec, seeds: np.ndarray) -> np.ndarray:
    return rng.hash64(np.asarray(seeds, dtype=np.uint64), int(rng.StreamId.POLICY), spec.noise_seed_offset)


def control_batch(spec: PolicySpec, obs, keys: np.ndarray, position: int):
    """Vectorized controller; ``obs`` is ``(x, z, vx, vz, theta, omega)`` arrays.

    Returns unclamped ``(thrust, elevator)`` arrays.  Noise for the call at
    counter ``position`` uses lanes 0 (thrust) and 1 (elevator).
    """
    x, z, vx, vz, theta, omega = obs
    if spec.kind is PolicyKind.ZERO_THRUST:
        zeros = np.zeros_like(np.asarray(x, dtype=np.float64))
        return zeros, zeros.copy()
    if spec.kind is not PolicyKind.PD_FAMILY:
        raise UsageError(f"{spec.kind.value} policies do not produce control inputs")

    g = spec.gains
    scale = g.min_gain_fraction + (1.0 - g.min_gain_fraction) * spec.quality
    ax_cmd = -scale * (g.kp_x * x + g.kd_x * vx)
    az_cmd = scale * g.kd_z * (glide_rate(np.maximum(z, 0.0)) - vz)
    tilt_limit = np.minimum(g.max_tilt, g.min_tilt + g.tilt_per_altitude * np.maximum(z, 0.0))
    theta_ref = np.clip(np.arctan(ax_cmd / GRAVITY), -tilt_limit, tilt_limit)
    cos_theta = np.maximum(np.cos(theta), 0.5)
    thrust = MASS * (GRAVITY + az_cmd) / (MAX_THRUST * cos_theta)
    elevator = scale * (g.kp_theta * (theta_ref - theta) - g.kd_theta * omega)
    noise = (1.0 - spec.quality) ** g.noise_exponent
    if noise > 0.0:
        thrust = thrust + noise * g.thrust_noise * rng.normal(keys, position, 0)
        elevator = elevator + noise * g.elevator_noise * rng.normal(keys, position, 1)
    return thrust, elevator


def act(spec: PolicySpec, observed_state: LanderState, rng_stream: rng.Stream) -> ControlInput:
    """Control input for one observed state; consumes one position of ``rng_stream``."""
    obs = tuple(np.array([v]) for v in observed_state.as_tuple())
    thrust, elevator = control_batch(spec, obs, np.array([rng_stream.key], dtype=np.uint64), rng_stream.position)
    rng_stream.position += 1
    return ControlInput(float(thrust[0]), float(elevator[0])).clamped()


def canned_touchdown(safe: bool, thresholds: SafetyThresholds | None = None) -> TouchdownRecord:
    """Representative record for a synthetic rollout: on target, or landing too hard."""
    t = thresholds or SafetyThresholds()
    vz = 0.0 if safe else -2.0 * t.delta_v
    return TouchdownRecord(t.x_target, vz, 0.0, t.vx_target, 1.0, 1.0, touched_down=True)


def synthetic_outcomes(spec: PolicySpec, seeds) -> np.ndarray:
    """Vectorized Bernoulli(true_p) outcomes, one per rollout seed."""
    if spec.kind is not PolicyKind.SYNTHETIC_BERNOULLI:
        raise UsageError(f"synthetic outcomes need a synthetic_bernoulli policy, got {spec.kind.value}")
    keys = rng.hash64(np.asarray(seeds, dtype=np.uint64), int(rng.StreamId.OUTCOME), spec.noise_seed_offset)
    return (rng.uniform(keys, 0) < spec.true_p).astype(np.int8)


def synthetic_outcome(spec: PolicySpec, seed: int, thresholds: SafetyThresholds | None = None) -> RolloutOutcome:
    """Outcome of one synthetic rollout, bypassing the dynamics."""
    y = int(synthetic_outcomes(spec, [seed & 0xFFFFFFFFFFFFFFFF])[0])
    record = canned_touchdown(bool(y), thresholds)
    verdict = evaluate_safety(record, thresholds or SafetyThresholds())
    return RolloutOutcome(
        outcome=y,
        verdict=verdict,
        touchdown=record,
        cumulative_reward=100.0 if y else 0.0,
        steps=0,
        seed=seed,
        terminal="synthetic",
    )


def checkpoint_ladder(
    count: int, quality_low: float, quality_high: float, template: PolicySpec | None = None
) -> list[PolicySpec]:
    """Evenly spaced ``pd_family`` qualities emulating a sequence of training checkpoints."""
    if count < 2:
        raise ConfigError("a checkpoint ladder needs at least two members")
    if not (0.0 <= quality_low <= quality_high <= 1.0):
        raise ConfigError(f"ladder qualities must satisfy 0 <= low <= high <= 1, got {quality_low}, {quality_high}")
    base = template or PolicySpec()
    qualities = np.linspace(quality_low, quality_high, count)
    return [
        replace(base, kind=PolicyKind.PD_FAMILY, quality=float(q), label=f"pd-{i + 1:02d}")
        for i, q in enumerate(qualities)
    ]
