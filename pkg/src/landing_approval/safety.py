"""Binary safe-landing event from a terminal touchdown record."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from landing_approval.errors import ConfigError

CONSTRAINT_NAMES = (
    "position",
    "vertical_speed",
    "pitch",
    "horizontal_speed",
    "left_contact",
    "right_contact",
)


@dataclass(frozen=True)
class SafetyThresholds:
    """Touchdown tolerances, in the simulator's nondimensional units."""

    delta_x: float = 0.20
    delta_v: float = 0.15
    delta_theta: float = 0.10
    delta_vx: float = 0.15
    delta_c: float = 0.50
    x_target: float = 0.0
    vx_target: float = 0.0

    def __post_init__(self) -> None:
        for name in ("delta_x", "delta_v", "delta_theta", "delta_vx"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be > 0, got {getattr(self, name)}")
        if not (0.0 < self.delta_c <= 1.0):
            raise ConfigError(f"delta_c must lie in (0, 1], got {self.delta_c}")


def _clamp01(value: float) -> float:
    return min(1.0, max(0.0, value))


@dataclass(frozen=True)
class TouchdownRecord:
    x_T: float
    vz_T: float
    theta_T: float
    vx_T: float
    contact_left: float
    contact_right: float
    touched_down: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "contact_left", _clamp01(self.contact_left))
        object.__setattr__(self, "contact_right", _clamp01(self.contact_right))

    @classmethod
    def no_touchdown(cls) -> TouchdownRecord:
        """Record for a crash or a timeout: nothing valid to evaluate."""
        return cls(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, touched_down=False)


@dataclass(frozen=True)
class SafetyVerdict:
    safe: bool
    constraint_flags: tuple[bool, bool, bool, bool, bool, bool]

    def as_dict(self) -> dict[str, bool]:
        return dict(zip(CONSTRAINT_NAMES, self.constraint_flags))


def constraint_flags_array(
    x_T, vz_T, theta_T, vx_T, contact_left, contact_right, touched_down, thresholds: SafetyThresholds
) -> np.ndarray:
    """Vectorized constraint check; returns a boolean array of shape ``(..., 6)``.

    All comparisons are inclusive.  Rows without a valid touchdown are all false.
    """
    t = thresholds
    flags = np.stack(
        [
            np.abs(np.asarray(x_T) - t.x_target) <= t.delta_x,
            np.abs(vz_T) <= t.delta_v,
            np.abs(theta_T) <= t.delta_theta,
            np.abs(np.asarray(vx_T) - t.vx_target) <= t.delta_vx,
            np.asarray(contact_left) >= t.delta_c,
            np.asarray(contact_right) >= t.delta_c,
        ],
        axis=-1,
    )
    return flags & np.asarray(touched_down, dtype=bool)[..., None]


def evaluate_safety(record: TouchdownRecord, thresholds: SafetyThresholds) -> SafetyVerdict:
    flags = constraint_flags_array(
        record.x_T,
        record.vz_T,
        record.theta_T,
        record.vx_T,
        record.contact_left,
        record.contact_right,
        record.touched_down,
        thresholds,
    )
    flag_tuple = tuple(bool(f) for f in flags)
    return SafetyVerdict(safe=all(flag_tuple), constraint_flags=flag_tuple)


def bernoulli_outcome(verdict: SafetyVerdict) -> int:
    return 1 if verdict.safe else 0
