from dataclasses import replace

import pytest
from hypothesis import given
from hypothesis import strategies as st

from landing_approval.errors import ConfigError
from landing_approval.safety import (
    CONSTRAINT_NAMES,
    SafetyThresholds,
    TouchdownRecord,
    bernoulli_outcome,
    evaluate_safety,
)

T = SafetyThresholds()
ON_TARGET = TouchdownRecord(0.0, 0.0, 0.0, 0.0, 1.0, 1.0)

records = st.builds(
    TouchdownRecord,
    st.floats(-0.5, 0.5),
    st.floats(-0.4, 0.4),
    st.floats(-0.3, 0.3),
    st.floats(-0.4, 0.4),
    st.floats(-0.2, 1.2),
    st.floats(-0.2, 1.2),
    st.booleans(),
)
tolerances = st.builds(
    SafetyThresholds,
    st.floats(0.01, 0.5),
    st.floats(0.01, 0.5),
    st.floats(0.01, 0.5),
    st.floats(0.01, 0.5),
    st.floats(0.01, 1.0),
)


def test_defaults():
    assert (T.delta_x, T.delta_v, T.delta_theta, T.delta_vx, T.delta_c) == (0.20, 0.15, 0.10, 0.15, 0.50)
    assert T.x_target == 0.0 and T.vx_target == 0.0


def test_on_target_is_safe():
    verdict = evaluate_safety(ON_TARGET, T)
    assert verdict.safe and all(verdict.constraint_flags)
    assert bernoulli_outcome(verdict) == 1


def test_hard_landing_fails_only_vertical_speed():
    verdict = evaluate_safety(replace(ON_TARGET, vz_T=-0.16), T)
    assert not verdict.safe
    flags = verdict.as_dict()
    assert flags["vertical_speed"] is False
    assert all(v for k, v in flags.items() if k != "vertical_speed")
    assert bernoulli_outcome(verdict) == 0


@pytest.mark.parametrize(
    "field,value",
    [("x_T", 0.20), ("x_T", -0.20), ("vz_T", -0.15), ("theta_T", 0.10), ("vx_T", 0.15), ("contact_left", 0.5)],
)
def test_boundaries_are_inclusive(field, value):
    assert evaluate_safety(replace(ON_TARGET, **{field: value}), T).safe


def test_crash_has_all_flags_false():
    verdict = evaluate_safety(TouchdownRecord.no_touchdown(), T)
    assert not verdict.safe
    assert not any(verdict.constraint_flags)
    assert bernoulli_outcome(verdict) == 0


def test_targets_shift_the_reference():
    t = replace(T, x_target=1.0, vx_target=0.5)
    assert evaluate_safety(TouchdownRecord(1.1, 0.0, 0.0, 0.6, 1.0, 1.0), t).safe
    assert not evaluate_safety(ON_TARGET, t).safe


def test_contacts_are_clamped():
    rec = TouchdownRecord(0, 0, 0, 0, 1.7, -0.3)
    assert rec.contact_left == 1.0 and rec.contact_right == 0.0


@pytest.mark.parametrize(
    "kwargs",
    [{"delta_x": 0}, {"delta_v": -1}, {"delta_theta": 0.0}, {"delta_vx": -0.1}, {"delta_c": 0}, {"delta_c": 1.5}],
)
def test_invalid_thresholds(kwargs):
    with pytest.raises(ConfigError):
        SafetyThresholds(**kwargs)


def test_flag_order():
    assert CONSTRAINT_NAMES == (
        "position",
        "vertical_speed",
        "pitch",
        "horizontal_speed",
        "left_contact",
        "right_contact",
    )


@given(records, tolerances)
def test_verdict_is_conjunction_of_flags(record, thresholds):
    verdict = evaluate_safety(record, thresholds)
    assert verdict.safe == all(verdict.constraint_flags)
    assert verdict == evaluate_safety(record, thresholds)
    if not record.touched_down:
        assert not any(verdict.constraint_flags)


@given(records, tolerances, st.floats(0.0, 1.0))
def test_shrinking_tolerances_never_clears_a_flag(record, thresholds, factor):
    tight = replace(
        thresholds,
        delta_x=thresholds.delta_x * factor or 1e-12,
        delta_v=thresholds.delta_v * factor or 1e-12,
        delta_theta=thresholds.delta_theta * factor or 1e-12,
        delta_vx=thresholds.delta_vx * factor or 1e-12,
        # For contacts, tightening means demanding more.
        delta_c=min(1.0, thresholds.delta_c / max(factor, 1e-12)),
    )
    loose = evaluate_safety(record, thresholds).constraint_flags
    strict = evaluate_safety(record, tight).constraint_flags
    for before, after in zip(loose, strict):
        assert before or not after
