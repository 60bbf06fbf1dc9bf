"""Seeded rollouts of a controller through the lander and Monte Carlo capability estimates.

Rollouts advance in lockstep as numpy batches.  Every random draw is a pure
function of (rollout seed, stream, step, lane), so a rollout's outcome does not
depend on which batch or worker process simulated it.
"""

from __future__ import annotations

import csv
import math
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from landing_approval import rng
from landing_approval.controllers import (
    PolicyKind,
    PolicySpec,
    canned_touchdown,
    control_batch,
    policy_keys,
    synthetic_outcomes,
)
from landing_approval.errors import ConfigError, RolloutError
from landing_approval.lander import (
    ConditionBatch,
    ConditionSpec,
    OperatingCondition,
    RolloutOutcome,
    contact_indicators,
    glide_rate,
    integrate,
    rollout_seeds,
    sample_conditions,
)
from landing_approval.safety import (
    SafetyThresholds,
    SafetyVerdict,
    TouchdownRecord,
    constraint_flags_array,
)

TOUCHDOWN, CRASH, TIMEOUT, SYNTHETIC = 1, 2, 3, 4
TERMINAL_NAMES = {TOUCHDOWN: "touchdown", CRASH: "crash", TIMEOUT: "timeout", SYNTHETIC: "synthetic"}

TRAJECTORY_COLUMNS = ("step", "t", "x", "z", "vx", "vz", "theta", "omega", "thrust", "elevator", "reward")

BATCH_SIZE = 4096


@dataclass(frozen=True)
class RolloutLimits:
    dt: float = 0.02
    max_steps: int = 1500
    gamma: float = 0.99
    tumble_bound: float = math.pi / 2
    landing_bonus: float = 100.0
    crash_penalty: float = 100.0

    def __post_init__(self) -> None:
        if not self.dt > 0:
            raise ConfigError("dt must be > 0")
        if self.max_steps < 1:
            raise ConfigError("max_steps must be >= 1")
        if not (0.0 < self.gamma <= 1.0):
            raise ConfigError("gamma must lie in (0, 1]")


@dataclass
class RolloutBatch:
    """Struct-of-arrays results for a set of rollouts, in rollout-index order."""

    seeds: np.ndarray
    outcome: np.ndarray
    flags: np.ndarray
    x_T: np.ndarray
    vz_T: np.ndarray
    theta_T: np.ndarray
    vx_T: np.ndarray
    contact_left: np.ndarray
    contact_right: np.ndarray
    touched_down: np.ndarray
    terminal: np.ndarray
    reward: np.ndarray
    steps: np.ndarray
    trajectory: list[tuple] | None = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.seeds)

    @property
    def successes(self) -> int:
        return int(self.outcome.sum())

    def outcome_at(self, i: int) -> RolloutOutcome:
        record = TouchdownRecord(
            float(self.x_T[i]),
            float(self.vz_T[i]),
            float(self.theta_T[i]),
            float(self.vx_T[i]),
            float(self.contact_left[i]),
            float(self.contact_right[i]),
            touched_down=bool(self.touched_down[i]),
        )
        flags = tuple(bool(f) for f in self.flags[i])
        return RolloutOutcome(
            outcome=int(self.outcome[i]),
            verdict=SafetyVerdict(safe=all(flags), constraint_flags=flags),
            touchdown=record,
            cumulative_reward=float(self.reward[i]),
            steps=int(self.steps[i]),
            seed=int(self.seeds[i]),
            terminal=TERMINAL_NAMES[int(self.terminal[i])],
        )

    @classmethod
    def concat(cls, parts: Sequence[RolloutBatch]) -> RolloutBatch:
        names = [n for n in cls.__dataclass_fields__ if n != "trajectory"]
        return cls(**{n: np.concatenate([getattr(p, n) for p in parts]) for n in names})


def _empty_batch(seeds: np.ndarray) -> RolloutBatch:
    n = len(seeds)
    return RolloutBatch(
        seeds=seeds,
        outcome=np.zeros(n, dtype=np.int8),
        flags=np.zeros((n, 6), dtype=bool),
        x_T=np.zeros(n),
        vz_T=np.zeros(n),
        theta_T=np.zeros(n),
        vx_T=np.zeros(n),
        contact_left=np.zeros(n),
        contact_right=np.zeros(n),
        touched_down=np.zeros(n, dtype=bool),
        terminal=np.zeros(n, dtype=np.int8),
        reward=np.zeros(n),
        steps=np.zeros(n, dtype=np.int64),
    )


def _synthetic_batch(policy: PolicySpec, seeds: np.ndarray, thresholds: SafetyThresholds) -> RolloutBatch:
    out = _empty_batch(seeds)
    y = synthetic_outcomes(policy, seeds).astype(bool)
    safe, unsafe = canned_touchdown(True, thresholds), canned_touchdown(False, thresholds)
    for name in ("x_T", "vz_T", "theta_T", "vx_T", "contact_left", "contact_right"):
        getattr(out, name)[:] = np.where(y, getattr(safe, name), getattr(unsafe, name))
    out.touched_down[:] = True
    out.flags[:] = constraint_flags_array(
        out.x_T, out.vz_T, out.theta_T, out.vx_T, out.contact_left, out.contact_right, out.touched_down, thresholds
    )
    out.outcome[:] = out.flags.all(axis=1)
    out.terminal[:] = SYNTHETIC
    out.reward[:] = np.where(y, 100.0, 0.0)
    return out


def simulate_batch(
    policy: PolicySpec,
    conditions: ConditionBatch,
    thresholds: SafetyThresholds,
    limits: RolloutLimits | None = None,
    trace: bool = False,
) -> RolloutBatch:
    """Integrate every rollout in ``conditions`` until touchdown, crash or timeout.

    With ``trace=True`` (single-rollout batches only) the per-step trajectory is
    kept in ``RolloutBatch.trajectory``; its final touchdown row is the
    interpolated ground-crossing state.
    """
    limits = limits or RolloutLimits()
    seeds = np.asarray(conditions.seed, dtype=np.uint64)
    if policy.kind is PolicyKind.SYNTHETIC_BERNOULLI:
        return _synthetic_batch(policy, seeds, thresholds)
    if trace and len(seeds) != 1:
        raise ValueError("trajectory tracing needs a single-rollout batch")

    out = _empty_batch(seeds)
    dt = limits.dt
    idx = np.arange(len(seeds))
    state = [np.array(getattr(conditions, k), dtype=np.float64) for k in ("x", "z", "vx", "vz", "theta", "omega")]
    wind = np.asarray(conditions.wind_mean, dtype=np.float64)
    gust_sd = np.asarray(conditions.wind_gust_sd, dtype=np.float64)
    sensor_sd = np.asarray(conditions.sensor_noise_sd, dtype=np.float64)
    gain = np.asarray(conditions.actuator_gain, dtype=np.float64)
    gust_keys = rng.stream_keys(seeds, rng.StreamId.GUST)
    sensor_keys = rng.stream_keys(seeds, rng.StreamId.SENSOR)
    pol_keys = policy_keys(policy, seeds)
    discount = np.ones(len(seeds))
    reward = np.zeros(len(seeds))
    rows: list[tuple] | None = [] if trace else None
    if rows is not None:
        rows.append((0, 0.0, *(float(v[0]) for v in state), 0.0, 0.0, 0.0))

    for k in range(limits.max_steps):
        if idx.size == 0:
            break
        obs = tuple(state[j] + sensor_sd * rng.normal(sensor_keys, k, j) for j in range(6))
        try:
            thrust, elevator = control_batch(policy, obs, pol_keys, k)
        except Exception as exc:
            raise RolloutError(f"policy {policy.name} failed at step {k}: {exc}") from exc
        thrust = np.clip(thrust, 0.0, 1.0)
        elevator = np.clip(elevator, -1.0, 1.0)
        gust = gust_sd * rng.normal(gust_keys, k, 0)
        prev = state
        with np.errstate(all="ignore"):
            state = list(integrate(*prev, thrust, elevator, gain, wind, gust, dt))
        x, z, vx, vz, theta, omega = state

        shaping = -(0.1 * (np.abs(x) + np.abs(vz - glide_rate(np.maximum(z, 0.0)))) + 0.05 * np.abs(theta)) - 0.01 * thrust
        reward = reward + discount * shaping

        finite = np.isfinite(x) & np.isfinite(z) & np.isfinite(vx) & np.isfinite(vz) & np.isfinite(theta) & np.isfinite(omega)
        crashed = ~finite | (np.abs(theta) > limits.tumble_bound)
        landed = ~crashed & (z <= 0.0)
        timed_out = ~crashed & ~landed & (k + 1 >= limits.max_steps)

        if landed.any():
            zp, zn = prev[1][landed], z[landed]
            frac = zp / (zp - zn)
            interp = [p[landed] + frac * (s[landed] - p[landed]) for p, s in zip(prev, state)]
            rows_idx = idx[landed]
            c_left, c_right = contact_indicators(interp[4])
            out.x_T[rows_idx] = interp[0]
            out.vx_T[rows_idx] = interp[2]
            out.vz_T[rows_idx] = interp[3]
            out.theta_T[rows_idx] = interp[4]
            out.contact_left[rows_idx] = c_left
            out.contact_right[rows_idx] = c_right
            out.touched_down[rows_idx] = True
            out.terminal[rows_idx] = TOUCHDOWN
            if rows is not None:
                values = [float(v[0]) for v in interp]
                values[1] = 0.0 if abs(values[1]) < 1e-9 else values[1]
                rows.append((k + 1, (k + float(frac[0])) * dt, *values, float(thrust[0]), float(elevator[0])))
        elif rows is not None:
            rows.append((k + 1, (k + 1) * dt, *(float(v[0]) for v in state), float(thrust[0]), float(elevator[0])))

        done = crashed | landed | timed_out
        if done.any():
            done_idx = idx[done]
            out.terminal[idx[crashed]] = CRASH
            out.terminal[idx[timed_out]] = TIMEOUT
            out.steps[done_idx] = k + 1
            flags = constraint_flags_array(
                out.x_T[done_idx],
                out.vz_T[done_idx],
                out.theta_T[done_idx],
                out.vx_T[done_idx],
                out.contact_left[done_idx],
                out.contact_right[done_idx],
                out.touched_down[done_idx],
                thresholds,
            )
            out.flags[done_idx] = flags
            safe = flags.all(axis=1)
            out.outcome[done_idx] = safe
            terminal_reward = np.where(safe, limits.landing_bonus, 0.0) - np.where(crashed[done], limits.crash_penalty, 0.0)
            out.reward[done_idx] = reward[done] + discount[done] * terminal_reward
            keep = ~done
            idx = idx[keep]
            state = [s[keep] for s in state]
            wind, gust_sd, sensor_sd, gain = wind[keep], gust_sd[keep], sensor_sd[keep], gain[keep]
            gust_keys, sensor_keys, pol_keys = gust_keys[keep], sensor_keys[keep], pol_keys[keep]
            discount, reward = discount[keep], reward[keep]
        discount = discount * limits.gamma

    if rows is not None:
        rows = _with_rewards(rows, out, limits)
        out.trajectory = rows
    return out


def _with_rewards(rows: list[tuple], out: RolloutBatch, limits: RolloutLimits) -> list[tuple]:
    # Per-step undiscounted shaping reward, plus the terminal bonus on the last row.
    result = [rows[0] + (0.0,)]
    for i, row in enumerate(rows[1:], start=1):
        _, _, x, z, vx, vz, theta, omega, thrust, elevator = row
        r = -(0.1 * (abs(x) + abs(vz - float(glide_rate(max(z, 0.0))))) + 0.05 * abs(theta)) - 0.01 * thrust
        if i == len(rows) - 1:
            if out.outcome[0]:
                r += limits.landing_bonus
            if out.terminal[0] == CRASH:
                r -= limits.crash_penalty
        result.append(row + (r,))
    return result


def run_rollout(
    policy: PolicySpec,
    condition: OperatingCondition,
    thresholds: SafetyThresholds | None = None,
    limits: RolloutLimits | None = None,
) -> RolloutOutcome:
    """Simulate a single rollout from an explicit operating condition."""
    batch = simulate_batch(
        policy, ConditionBatch.from_conditions([condition]), thresholds or SafetyThresholds(), limits
    )
    return batch.outcome_at(0)


def trace_rollout(
    policy: PolicySpec,
    condition: OperatingCondition,
    thresholds: SafetyThresholds | None = None,
    limits: RolloutLimits | None = None,
) -> tuple[RolloutOutcome, list[tuple]]:
    batch = simulate_batch(
        policy, ConditionBatch.from_conditions([condition]), thresholds or SafetyThresholds(), limits, trace=True
    )
    return batch.outcome_at(0), batch.trajectory or []


def write_trajectory_csv(rows: list[tuple], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRAJECTORY_COLUMNS)
        for row in rows:
            writer.writerow([row[0]] + [repr(float(v)) for v in row[1:]])


def _run_chunk(args) -> RolloutBatch:
    policy, spec, thresholds, limits, base_seed, start, stop = args
    seeds = rollout_seeds(base_seed, np.arange(start, stop, dtype=np.uint64))
    if policy.kind is PolicyKind.SYNTHETIC_BERNOULLI:
        return _synthetic_batch(policy, seeds, thresholds)
    return simulate_batch(policy, sample_conditions(spec, seeds), thresholds, limits)


def run_rollouts(
    policy: PolicySpec,
    spec: ConditionSpec,
    thresholds: SafetyThresholds,
    base_seed: int,
    count: int,
    start: int = 0,
    limits: RolloutLimits | None = None,
    workers: int = 1,
) -> RolloutBatch:
    """Rollouts ``start .. start+count-1`` of an experiment, merged in index order."""
    if count < 0:
        raise ValueError("count must be >= 0")
    limits = limits or RolloutLimits()
    chunk = BATCH_SIZE if policy.kind is not PolicyKind.SYNTHETIC_BERNOULLI else 1 << 20
    if workers > 1:
        chunk = min(chunk, max(1, math.ceil(count / workers)))
    bounds = [(s, min(s + chunk, start + count)) for s in range(start, start + count, chunk)]
    tasks = [(policy, spec, thresholds, limits, base_seed, a, b) for a, b in bounds]
    if not tasks:
        return _empty_batch(np.zeros(0, dtype=np.uint64))
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, tasks))
    else:
        parts = [_run_chunk(t) for t in tasks]
    return RolloutBatch.concat(parts) if len(parts) > 1 else parts[0]


@dataclass(frozen=True)
class CapabilityEstimate:
    successes: int
    n: int

    @property
    def p_hat(self) -> float:
        return self.successes / self.n

    @property
    def standard_error(self) -> float:
        p = self.p_hat
        return math.sqrt(p * (1.0 - p) / self.n)


@dataclass(frozen=True)
class MarginalCapabilities:
    joint: float
    marginals: tuple[float, ...]
    n: int


def estimate_capability(
    policy: PolicySpec,
    spec: ConditionSpec,
    thresholds: SafetyThresholds,
    n: int,
    base_seed: int,
    limits: RolloutLimits | None = None,
    workers: int = 1,
) -> CapabilityEstimate:
    """Monte Carlo estimate of the safe-landing probability over ``n`` seeded rollouts."""
    if n < 1:
        raise ValueError("n must be >= 1")
    batch = run_rollouts(policy, spec, thresholds, base_seed, n, limits=limits, workers=workers)
    return CapabilityEstimate(batch.successes, n)


def estimate_marginal_capabilities(
    policy: PolicySpec,
    spec: ConditionSpec,
    thresholds: SafetyThresholds,
    n: int,
    base_seed: int,
    limits: RolloutLimits | None = None,
    workers: int = 1,
) -> MarginalCapabilities:
    """Per-constraint satisfaction frequencies and the joint frequency from the same rollouts."""
    if n < 1:
        raise ValueError("n must be >= 1")
    batch = run_rollouts(policy, spec, thresholds, base_seed, n, limits=limits, workers=workers)
    marginals = tuple(float(m) for m in batch.flags.mean(axis=0))
    return MarginalCapabilities(joint=batch.successes / n, marginals=marginals, n=n)


@dataclass(frozen=True)
class RobustEstimate:
    value: float
    per_condition: tuple[float, ...]
    weights: tuple[float, ...]


def estimate_robust_capability(
    policy: PolicySpec,
    condition_grid: Sequence[tuple[ConditionSpec, float]],
    thresholds: SafetyThresholds,
    n_per_condition: int,
    base_seed: int,
    limits: RolloutLimits | None = None,
    workers: int = 1,
) -> RobustEstimate:
    """Weighted average of per-condition capability estimates."""
    weights = [float(w) for _, w in condition_grid]
    if not weights or any(w < 0 for w in weights) or abs(sum(weights) - 1.0) > 1e-9:
        raise ConfigError(f"condition weights must be nonnegative and sum to 1, got {weights}")
    per_condition = []
    for k, (spec, weight) in enumerate(condition_grid):
        if weight == 0.0:
            per_condition.append(float("nan"))
            continue
        est = estimate_capability(
            policy, spec, thresholds, n_per_condition, rng.derive_key(base_seed, k), limits, workers
        )
        per_condition.append(est.p_hat)
    value = sum(w * p for w, p in zip(weights, per_condition) if w > 0)
    return RobustEstimate(value=value, per_condition=tuple(per_condition), weights=tuple(weights))
