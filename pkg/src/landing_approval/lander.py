"""Planar point-mass-plus-attitude lander dynamics and operating conditions.

Units are nondimensional: mass, gravity and inertia are 1.  Thrust acts along
the body axis, so pitching by ``theta`` tilts it toward ``+x``.  The kernel
functions accept scalars or numpy arrays and are used unchanged by the batched
rollout engine.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from landing_approval import rng
from landing_approval.errors import ConfigError, NumericalError
from landing_approval.safety import SafetyVerdict, TouchdownRecord

MASS = 1.0
GRAVITY = 1.0
MAX_THRUST = 1.8
MAX_TORQUE = 4.0
INERTIA = 1.0

LEG_OFFSET = 0.1
LEG_LENGTH = 0.05

# Reference descent profile: vz_ref(z) = -(GLIDE_TOUCHDOWN_RATE + GLIDE_SLOPE * z).
GLIDE_TOUCHDOWN_RATE = 0.05
GLIDE_SLOPE = 0.5


@dataclass(frozen=True)
class LanderState:
    x: float
    z: float
    vx: float
    vz: float
    theta: float
    omega: float

    def as_tuple(self) -> tuple[float, ...]:
        return (self.x, self.z, self.vx, self.vz, self.theta, self.omega)

    def is_finite(self) -> bool:
        return all(math.isfinite(v) for v in self.as_tuple())


@dataclass(frozen=True)
class ControlInput:
    thrust: float
    elevator: float

    def clamped(self) -> ControlInput:
        return ControlInput(
            thrust=min(1.0, max(0.0, self.thrust)),
            elevator=min(1.0, max(-1.0, self.elevator)),
        )


@dataclass(frozen=True)
class OperatingCondition:
    initial_state: LanderState
    wind_mean: float = 0.0
    wind_gust_sd: float = 0.0
    sensor_noise_sd: float = 0.0
    actuator_gain: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.wind_gust_sd < 0 or self.sensor_noise_sd < 0:
            raise ConfigError("noise scales must be nonnegative")
        if not self.actuator_gain > 0:
            raise ConfigError("actuator gain must be > 0")


@dataclass(frozen=True)
class RolloutOutcome:
    outcome: int
    verdict: SafetyVerdict
    touchdown: TouchdownRecord
    cumulative_reward: float
    steps: int
    seed: int
    terminal: str = "touchdown"


Range = tuple[float, float]


@dataclass(frozen=True)
class ConditionSpec:
    """Uniform ranges from which each rollout's operating condition is drawn."""

    z0: Range = (0.9, 1.1)
    x0: Range = (-0.3, 0.3)
    vx0: Range = (-0.1, 0.1)
    vz0: Range = (-0.1, 0.0)
    theta0: Range = (-0.05, 0.05)
    omega0: Range = (-0.05, 0.05)
    wind_mean: Range = (-0.05, 0.05)
    wind_gust_sd: Range = (0.0, 0.1)
    sensor_noise_sd: Range = (0.0, 0.01)
    actuator_gain: Range = (0.9, 1.1)

    def __post_init__(self) -> None:
        for f in fields(self):
            lo, hi = getattr(self, f.name)
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise ConfigError(f"range {f.name} must be finite")
            if lo > hi:
                raise ConfigError(f"range {f.name} is inverted: ({lo}, {hi})")
            object.__setattr__(self, f.name, (float(lo), float(hi)))
        if self.wind_gust_sd[0] < 0 or self.sensor_noise_sd[0] < 0:
            raise ConfigError("noise scale ranges must be nonnegative")
        if self.z0[0] <= 0:
            raise ConfigError("initial altitude must be > 0")
        if self.actuator_gain[0] <= 0:
            raise ConfigError("actuator gain range must be > 0")

    @classmethod
    def nominal(cls, **point: float) -> ConditionSpec:
        """Degenerate spec pinned at single values (defaults: range midpoints)."""
        base = cls()
        values = {f.name: sum(getattr(base, f.name)) / 2 for f in fields(cls)}
        values.update(point)
        return cls(**{k: (v, v) for k, v in values.items()})

    def to_dict(self) -> dict[str, list[float]]:
        return {k: list(v) for k, v in asdict(self).items()}

    @classmethod
    def from_dict(cls, data: dict) -> ConditionSpec:
        unknown = set(data) - {f.name for f in fields(cls)}
        if unknown:
            raise ConfigError(f"unknown condition fields: {sorted(unknown)}")
        try:
            return cls(**{k: tuple(v) for k, v in data.items()})
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad condition range: {exc}") from exc


_CONDITION_FIELDS = tuple(f.name for f in fields(ConditionSpec))


@dataclass
class ConditionBatch:
    """Struct-of-arrays view of many operating conditions."""

    x: np.ndarray
    z: np.ndarray
    vx: np.ndarray
    vz: np.ndarray
    theta: np.ndarray
    omega: np.ndarray
    wind_mean: np.ndarray
    wind_gust_sd: np.ndarray
    sensor_noise_sd: np.ndarray
    actuator_gain: np.ndarray
    seed: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return len(self.seed)

    def __getitem__(self, i: int) -> OperatingCondition:
        return OperatingCondition(
            initial_state=LanderState(
                float(self.x[i]),
                float(self.z[i]),
                float(self.vx[i]),
                float(self.vz[i]),
                float(self.theta[i]),
                float(self.omega[i]),
            ),
            wind_mean=float(self.wind_mean[i]),
            wind_gust_sd=float(self.wind_gust_sd[i]),
            sensor_noise_sd=float(self.sensor_noise_sd[i]),
            actuator_gain=float(self.actuator_gain[i]),
            seed=int(self.seed[i]),
        )

    @classmethod
    def from_conditions(cls, conditions: list[OperatingCondition]) -> ConditionBatch:
        def col(get):
            return np.array([get(c) for c in conditions], dtype=np.float64)

        return cls(
            x=col(lambda c: c.initial_state.x),
            z=col(lambda c: c.initial_state.z),
            vx=col(lambda c: c.initial_state.vx),
            vz=col(lambda c: c.initial_state.vz),
            theta=col(lambda c: c.initial_state.theta),
            omega=col(lambda c: c.initial_state.omega),
            wind_mean=col(lambda c: c.wind_mean),
            wind_gust_sd=col(lambda c: c.wind_gust_sd),
            sensor_noise_sd=col(lambda c: c.sensor_noise_sd),
            actuator_gain=col(lambda c: c.actuator_gain),
            seed=np.array([c.seed & 0xFFFFFFFFFFFFFFFF for c in conditions], dtype=np.uint64),
        )


def rollout_seeds(base_seed: int, indices) -> np.ndarray:
    """Per-rollout 64-bit seeds derived from the experiment seed and rollout index."""
    return rng.hash64(base_seed, np.asarray(indices, dtype=np.uint64))


def sample_conditions(spec: ConditionSpec, seeds) -> ConditionBatch:
    seeds = np.atleast_1d(np.asarray(seeds, dtype=np.uint64))
    keys = rng.stream_keys(seeds, rng.StreamId.CONDITION)
    draws = {}
    for lane, name in enumerate(_CONDITION_FIELDS):
        lo, hi = getattr(spec, name)
        draws[name] = lo + (hi - lo) * rng.uniform(keys, 0, lane) if hi > lo else np.full(len(seeds), lo)
    return ConditionBatch(
        x=draws["x0"],
        z=draws["z0"],
        vx=draws["vx0"],
        vz=draws["vz0"],
        theta=draws["theta0"],
        omega=draws["omega0"],
        wind_mean=draws["wind_mean"],
        wind_gust_sd=draws["wind_gust_sd"],
        sensor_noise_sd=draws["sensor_noise_sd"],
        actuator_gain=draws["actuator_gain"],
        seed=seeds,
    )


def sample_operating_condition(spec: ConditionSpec, seed: int) -> OperatingCondition:
    """Draw one operating condition; a deterministic function of ``(spec, seed)``."""
    return sample_conditions(spec, [seed & 0xFFFFFFFFFFFFFFFF])[0]


def glide_rate(z):
    """Reference vertical velocity along the descent profile at altitude ``z``."""
    return -(GLIDE_TOUCHDOWN_RATE + GLIDE_SLOPE * z)


def integrate(x, z, vx, vz, theta, omega, thrust, elevator, actuator_gain, wind, gust, dt):
    """One semi-implicit Euler step; controls must already be clamped."""
    accel = MAX_THRUST * thrust * actuator_gain / MASS
    ax = accel * np.sin(theta) + wind + gust
    az = accel * np.cos(theta) - GRAVITY
    vx = vx + ax * dt
    vz = vz + az * dt
    omega = omega + (MAX_TORQUE / INERTIA) * elevator * dt
    return x + vx * dt, z + vz * dt, vx, vz, theta + omega * dt, omega


def contact_indicators(theta):
    """Normalized leg-contact indicators ``(left, right)`` at a touchdown with pitch ``theta``.

    A leg reads 1 when its tip sits exactly on the ground and falls to 0 once
    the tip is a full leg length off it.
    """
    sag = LEG_LENGTH * (1.0 - np.cos(theta))
    tilt = LEG_OFFSET * np.sin(theta)
    left = np.clip(1.0 - np.abs(tilt + sag) / LEG_LENGTH, 0.0, 1.0)
    right = np.clip(1.0 - np.abs(-tilt + sag) / LEG_LENGTH, 0.0, 1.0)
    return left, right


def step(
    state: LanderState,
    control: ControlInput,
    condition: OperatingCondition,
    rng_stream: rng.Stream,
    dt: float = 0.02,
) -> LanderState:
    """Advance the true state by ``dt``; consumes one gust draw from ``rng_stream``."""
    if not state.is_finite():
        raise NumericalError(f"non-finite state {state}")
    u = control.clamped()
    gust = condition.wind_gust_sd * float(rng_stream.normal()[0])
    out = integrate(
        *state.as_tuple(),
        u.thrust,
        u.elevator,
        condition.actuator_gain,
        condition.wind_mean,
        gust,
        dt,
    )
    new = LanderState(*(float(v) for v in out))
    if not new.is_finite():
        raise NumericalError(f"step produced a non-finite state from {state}")
    return new
