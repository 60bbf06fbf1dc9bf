"""JSON experiment configuration with every reference default baked in.

A config file holds up to six sections: ``prior``, ``decision``,
``thresholds``, ``environment``, ``policy`` and ``experiment``.  Missing keys
fall back to defaults; unknown keys are rejected so typos do not pass silently.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

from landing_approval.beta import BetaParams
from landing_approval.controllers import PolicySpec
from landing_approval.errors import ConfigError
from landing_approval.lander import ConditionSpec
from landing_approval.rollout import RolloutLimits
from landing_approval.safety import SafetyThresholds
from landing_approval.sequential import ValidationConfig

SECTIONS = ("prior", "decision", "thresholds", "environment", "policy", "experiment")


@dataclass(frozen=True)
class LadderSettings:
    count: int = 10
    quality_low: float = 0.3
    quality_high: float = 1.0


@dataclass(frozen=True)
class ExperimentSettings:
    ladder: LadderSettings = field(default_factory=LadderSettings)
    oracle_rollouts: int = 10_000
    calibration_true_p: tuple[float, ...] = (0.40, 0.90, 0.95, 0.99, 0.999)
    calibration_sessions: int = 10_000
    boundary_p0_grid: tuple[float, ...] = (0.90, 0.95, 0.99)
    # Seed and sample size that certified the shipped PD gains.
    certification_seed: int = 20240601
    certification_rollouts: int = 10_000


@dataclass(frozen=True)
class Config:
    validation: ValidationConfig = field(default_factory=ValidationConfig)
    thresholds: SafetyThresholds = field(default_factory=SafetyThresholds)
    conditions: ConditionSpec = field(default_factory=ConditionSpec)
    limits: RolloutLimits = field(default_factory=RolloutLimits)
    policy: PolicySpec = field(default_factory=PolicySpec)
    experiment: ExperimentSettings = field(default_factory=ExperimentSettings)

    def to_dict(self) -> dict[str, Any]:
        v = self.validation
        return {
            "prior": {"alpha": v.prior.alpha, "beta": v.prior.beta},
            "decision": {"p0": v.p0, "tau_A": v.tau_A, "tau_R": v.tau_R, "n_min": v.n_min, "n_max": v.n_max},
            "thresholds": asdict(self.thresholds),
            "environment": {"conditions": self.conditions.to_dict(), "limits": asdict(self.limits)},
            "policy": self.policy.to_dict(),
            "experiment": {
                "ladder": asdict(self.experiment.ladder),
                "oracle_rollouts": self.experiment.oracle_rollouts,
                "calibration_true_p": list(self.experiment.calibration_true_p),
                "calibration_sessions": self.experiment.calibration_sessions,
                "boundary_p0_grid": list(self.experiment.boundary_p0_grid),
                "certification_seed": self.experiment.certification_seed,
                "certification_rollouts": self.experiment.certification_rollouts,
            },
        }


def _take(section: str, data: dict, cls) -> dict:
    if not isinstance(data, dict):
        raise ConfigError(f"section {section!r} must be an object")
    allowed = {f.name for f in fields(cls)}
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {section!r}: {sorted(unknown)}")
    return data


def _build(section: str, cls, data: dict, **extra):
    try:
        return cls(**_take(section, data, cls), **extra)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {section!r} section: {exc}") from exc


def config_from_dict(data: dict[str, Any]) -> Config:
    if not isinstance(data, dict):
        raise ConfigError("config document must be a JSON object")
    unknown = set(data) - set(SECTIONS)
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")

    prior = _build("prior", BetaParams, data.get("prior", {}))
    validation = _build("decision", ValidationConfig, data.get("decision", {}), prior=prior)
    thresholds = _build("thresholds", SafetyThresholds, data.get("thresholds", {}))

    env = data.get("environment", {})
    if not isinstance(env, dict) or set(env) - {"conditions", "limits"}:
        raise ConfigError("'environment' may only contain 'conditions' and 'limits'")
    conditions = ConditionSpec.from_dict(env.get("conditions", {}))
    limits = _build("environment.limits", RolloutLimits, env.get("limits", {}))

    policy = PolicySpec.from_dict(data.get("policy", {}))

    exp = dict(data.get("experiment", {}))
    ladder = _build("experiment.ladder", LadderSettings, exp.pop("ladder", {}))
    for key in ("calibration_true_p", "boundary_p0_grid"):
        if key in exp:
            exp[key] = tuple(float(v) for v in exp[key])
    experiment = _build("experiment", ExperimentSettings, exp, ladder=ladder)
    if experiment.oracle_rollouts < 1 or experiment.calibration_sessions < 1:
        raise ConfigError("rollout and session counts must be >= 1")
    if any(not (0.0 <= p <= 1.0) for p in experiment.calibration_true_p):
        raise ConfigError("calibration true_p values must lie in [0, 1]")
    if any(not (0.0 < p < 1.0) for p in experiment.boundary_p0_grid):
        raise ConfigError("boundary p0 values must lie in (0, 1)")

    return Config(
        validation=validation,
        thresholds=thresholds,
        conditions=conditions,
        limits=limits,
        policy=policy,
        experiment=experiment,
    )


def load_config(path: str | Path | None) -> Config:
    """Read a JSON config file; ``None`` yields the defaults."""
    if path is None:
        return Config()
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return config_from_dict(data)
