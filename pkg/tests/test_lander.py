import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from landing_approval import rng
from landing_approval.errors import ConfigError, NumericalError
from landing_approval.lander import (
    GRAVITY,
    MAX_THRUST,
    ConditionSpec,
    ControlInput,
    LanderState,
    OperatingCondition,
    contact_indicators,
    integrate,
    rollout_seeds,
    sample_conditions,
    sample_operating_condition,
    step,
)

from oracles import projectile

CALM = OperatingCondition(LanderState(0.0, 1.0, 0.0, 0.0, 0.0, 0.0))


def stream():
    return rng.Stream.for_seed(1, rng.StreamId.GUST)


def test_free_fall_step():
    dt = 0.02
    new = step(CALM.initial_state, ControlInput(0.0, 0.0), CALM, stream(), dt)
    assert new.vz == -GRAVITY * dt
    assert new.x == 0.0 and new.theta == 0.0 and new.vx == 0.0


def test_no_torque_keeps_spin():
    start = LanderState(0.0, 1.0, 0.1, -0.2, 0.05, 0.3)
    new = step(start, ControlInput(0.7, 0.0), OperatingCondition(start), stream())
    assert new.omega == 0.3


def test_hover_balance():
    thrust = 1.0 * GRAVITY / (MAX_THRUST * math.cos(0.0))
    state = CALM.initial_state
    s = stream()
    for _ in range(100):
        nxt = step(state, ControlInput(thrust, 0.0), CALM, s)
        assert abs(nxt.vz - state.vz) <= 1e-12
        state = nxt


def test_ballistic_matches_projectile():
    dt = 1e-3
    x0, z0, vx0, vz0 = 0.1, 1.0, 0.3, 0.2
    state = (x0, z0, vx0, vz0, 0.0, 0.0)
    worst = 0.0
    for k in range(1, 1001):
        state = integrate(*state, 0.0, 0.0, 1.0, 0.0, 0.0, dt)
        px, pz = projectile(x0, z0, vx0, vz0, k * dt)
        err = max(abs(state[0] - px), abs(state[1] - pz))
        # Semi-implicit Euler drifts by g*dt*t/2 in altitude.
        assert err <= GRAVITY * dt * k * dt / 2 + 1e-12
        worst = max(worst, err)
    assert worst <= 1e-3


def test_controls_are_clamped():
    u = ControlInput(3.0, -5.0).clamped()
    assert (u.thrust, u.elevator) == (1.0, -1.0)
    assert ControlInput(-1.0, 0.2).clamped() == ControlInput(0.0, 0.2)


def test_non_finite_state_raises():
    bad = LanderState(0.0, math.nan, 0.0, 0.0, 0.0, 0.0)
    with pytest.raises(NumericalError):
        step(bad, ControlInput(0.5, 0.0), CALM, stream())


def test_gust_consumes_one_draw():
    s = stream()
    cond = OperatingCondition(CALM.initial_state, wind_gust_sd=0.1)
    step(CALM.initial_state, ControlInput(0.5, 0.0), cond, s)
    assert s.position == 1


@pytest.mark.parametrize("kwargs", [{"wind_gust_sd": -0.1}, {"sensor_noise_sd": -1}, {"actuator_gain": 0.0}])
def test_operating_condition_validation(kwargs):
    with pytest.raises(ConfigError):
        OperatingCondition(CALM.initial_state, **kwargs)


def test_zero_width_spec_gives_nominal_condition():
    spec = ConditionSpec.nominal(z0=1.0, x0=0.05)
    conds = [sample_operating_condition(spec, s) for s in (0, 1, 2**63)]
    for c in conds:
        assert c.initial_state.z == 1.0 and c.initial_state.x == 0.05
        assert c.actuator_gain == 1.0
    assert len({c.initial_state for c in conds}) == 1


def test_sampling_is_deterministic():
    spec = ConditionSpec()
    assert sample_operating_condition(spec, 12345) == sample_operating_condition(spec, 12345)
    assert sample_operating_condition(spec, 12345) != sample_operating_condition(spec, 12346)


def test_altitude_mean():
    batch = sample_conditions(ConditionSpec(), rollout_seeds(5, np.arange(100_000)))
    assert abs(batch.z.mean() - 1.0) <= 0.001
    assert batch.z.min() >= 0.9 and batch.z.max() <= 1.1


def test_batch_and_scalar_sampling_agree():
    seeds = rollout_seeds(3, np.arange(50))
    batch = sample_conditions(ConditionSpec(), seeds)
    for i in (0, 17, 49):
        assert batch[i] == sample_operating_condition(ConditionSpec(), int(seeds[i]))


@pytest.mark.parametrize(
    "data", [{"z0": [1.2, 1.0]}, {"wind_gust_sd": [-0.1, 0.1]}, {"z0": [0.0, 1.0]}, {"bogus": [0, 1]}]
)
def test_spec_validation(data):
    with pytest.raises(ConfigError):
        ConditionSpec.from_dict(data)


def test_spec_round_trip():
    spec = ConditionSpec(x0=(-0.1, 0.2))
    assert ConditionSpec.from_dict(spec.to_dict()) == spec


def test_flat_touchdown_has_full_contact():
    left, right = contact_indicators(np.array([0.0]))
    assert left[0] == 1.0 and right[0] == 1.0


@given(st.floats(-1.5, 1.5))
def test_contacts_degrade_with_tilt(theta):
    left, right = contact_indicators(np.array([theta, theta / 2]))
    assert 0.0 <= left.min() and left.max() <= 1.0
    assert min(left[0], right[0]) <= min(left[1], right[1]) + 1e-15


def test_contact_threshold_binds_near_quarter_radian():
    thetas = np.linspace(0.0, 0.6, 6001)
    left, right = contact_indicators(thetas)
    first = thetas[np.minimum(left, right) < 0.5][0]
    assert 0.2 < first < 0.3
