import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from landing_approval import rng
from landing_approval.controllers import (
    DEFAULT_GAINS,
    PolicyKind,
    PolicySpec,
    act,
    checkpoint_ladder,
    synthetic_outcome,
    synthetic_outcomes,
)
from landing_approval.errors import ConfigError, UsageError
from landing_approval.lander import GRAVITY, MAX_THRUST, ConditionSpec, LanderState, glide_rate, rollout_seeds
from landing_approval.rollout import estimate_capability
from landing_approval.safety import SafetyThresholds

T = SafetyThresholds()


def synthetic(p, offset=0):
    return PolicySpec(kind=PolicyKind.SYNTHETIC_BERNOULLI, true_p=p, noise_seed_offset=offset)


def test_zero_error_command():
    z = 0.6
    on_profile = LanderState(0.0, z, 0.0, glide_rate(z), 0.0, 0.0)
    u = act(PolicySpec(quality=1.0), on_profile, rng.Stream(1))
    assert u.elevator == 0.0
    assert u.thrust == pytest.approx(GRAVITY / MAX_THRUST, abs=1e-15)


def test_same_seed_same_action():
    state = LanderState(0.1, 0.5, -0.1, -0.3, 0.02, 0.01)
    spec = PolicySpec(quality=0.4)
    assert act(spec, state, rng.Stream(9)) == act(spec, state, rng.Stream(9))
    assert act(spec, state, rng.Stream(9)) != act(spec, state, rng.Stream(9, position=1))


def test_act_consumes_one_position():
    s = rng.Stream(3)
    act(PolicySpec(quality=0.2), LanderState(0, 1, 0, 0, 0, 0), s)
    assert s.position == 1


def test_zero_thrust_policy():
    u = act(PolicySpec(kind=PolicyKind.ZERO_THRUST), LanderState(0, 1, 0, 0, 0.3, 0), rng.Stream(0))
    assert (u.thrust, u.elevator) == (0.0, 0.0)


def test_synthetic_policy_cannot_act():
    with pytest.raises(UsageError):
        act(synthetic(0.5), LanderState(0, 1, 0, 0, 0, 0), rng.Stream(0))


@pytest.mark.parametrize("kwargs", [{"quality": 1.2}, {"quality": -0.1}])
def test_quality_domain(kwargs):
    with pytest.raises(ConfigError):
        PolicySpec(**kwargs)


@pytest.mark.parametrize("p", [1.5, -0.01])
def test_true_p_domain(p):
    with pytest.raises(ConfigError):
        synthetic(p)


def test_policy_round_trip():
    spec = PolicySpec(quality=0.3, label="x", gains={**DEFAULT_GAINS.__dict__, "kp_x": 2.0})
    assert PolicySpec.from_dict(spec.to_dict()) == spec
    with pytest.raises(ConfigError):
        PolicySpec.from_dict({"kind": "pd_family", "nonsense": 1})


@pytest.mark.parametrize("p,expected", [(1.0, 1), (0.0, 0)])
def test_certain_synthetic_outcomes(p, expected):
    seeds = rollout_seeds(4, np.arange(1000))
    assert (synthetic_outcomes(synthetic(p), seeds) == expected).all()


def test_synthetic_rate_tight():
    seeds = rollout_seeds(123, np.arange(1_000_000))
    rate = synthetic_outcomes(synthetic(0.957), seeds).mean()
    assert abs(rate - 0.957) <= 0.0007


@pytest.mark.parametrize("p", [0.1, 0.3, 0.5, 0.7, 0.9, 0.95, 0.99])
def test_synthetic_rate_converges(p):
    seeds = rollout_seeds(int(p * 1000), np.arange(100_000))
    rate = synthetic_outcomes(synthetic(p), seeds).mean()
    assert abs(rate - p) <= 3 * math.sqrt(p / 100_000)


def test_synthetic_outcome_record():
    safe = synthetic_outcome(synthetic(1.0), 5, T)
    unsafe = synthetic_outcome(synthetic(0.0), 5, T)
    assert safe.outcome == 1 and safe.verdict.safe
    assert unsafe.outcome == 0 and not unsafe.verdict.safe
    with pytest.raises(UsageError):
        synthetic_outcome(PolicySpec(), 5, T)


def test_noise_offset_changes_stream():
    seeds = rollout_seeds(1, np.arange(200))
    a = synthetic_outcomes(synthetic(0.5), seeds)
    b = synthetic_outcomes(synthetic(0.5, offset=1), seeds)
    assert not np.array_equal(a, b)


def test_ladder_is_linspace():
    ladder = checkpoint_ladder(10, 0.3, 1.0)
    assert [s.quality for s in ladder] == pytest.approx(np.linspace(0.3, 1.0, 10).tolist(), abs=1e-15)
    assert ladder[1].quality == pytest.approx(0.3778, abs=1e-4)
    assert [s.label for s in ladder][:2] == ["pd-01", "pd-02"]
    assert [s.quality for s in checkpoint_ladder(2, 0.3, 1.0)] == [0.3, 1.0]


@pytest.mark.parametrize("args", [(1, 0.3, 1.0), (5, 0.8, 0.2), (3, -0.1, 0.5)])
def test_ladder_validation(args):
    with pytest.raises(ConfigError):
        checkpoint_ladder(*args)


@pytest.mark.slow
def test_top_quality_certified():
    est = estimate_capability(PolicySpec(quality=1.0), ConditionSpec(), T, 10_000, 20240601)
    assert est.p_hat >= 0.98


@pytest.mark.slow
def test_ladder_monotone_within_mc_error():
    estimates = [
        estimate_capability(spec, ConditionSpec(), T, 10_000, 20240601) for spec in checkpoint_ladder(10, 0.3, 1.0)
    ]
    for lo, hi in zip(estimates, estimates[1:]):
        sigma = math.hypot(lo.standard_error, hi.standard_error)
        assert hi.p_hat >= lo.p_hat - 3 * sigma
