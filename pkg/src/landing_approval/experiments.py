"""The five harness commands and the files they write.

Every command is a pure function of ``(config, base_seed)``: tabular outputs
are CSV with a fixed column order, session logs are JSONL, summaries are
sorted-key JSON.
"""

from __future__ import annotations

import csv
import json
import logging
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from landing_approval import rng
from landing_approval.beta import approval_probability, posterior_update
from landing_approval.config import Config
from landing_approval.controllers import PolicyKind, PolicySpec, checkpoint_ladder, synthetic_outcomes
from landing_approval.errors import UsageError
from landing_approval.lander import rollout_seeds, sample_operating_condition
from landing_approval.rollout import RolloutBatch, run_rollouts, trace_rollout, write_trajectory_csv
from landing_approval.sequential import (
    Decision,
    ValidationConfig,
    ValidationSession,
    decide,
    decision_table,
    empirical_rule,
    read_history_jsonl,
    run_sessions,
    stopping_time,
    validation_saving,
)

log = logging.getLogger(__name__)

SCHEMAS: dict[str, tuple[str, ...]] = {
    "approval_trace.csv": ("n", "q"),
    "boundary.csv": ("p0", "n", "S", "empirical_rate", "q", "bayesian_decision", "empirical_decision"),
    "calibration.csv": (
        "true_p",
        "sessions",
        "approve_freq",
        "reject_freq",
        "exhaust_freq",
        "mean_stopping_time",
        "validation_saving",
    ),
    "stopping.csv": ("controller", "stopping_rollout", "final_decision"),
    "comparison.csv": (
        "controller",
        "quality",
        "success",
        "success_se",
        "empirical_decision",
        "q_N",
        "bayesian_decision",
        "q_full_budget",
    ),
    "progression.csv": ("controller", "quality", "mean_reward", "success", "session_success_rate", "q_N"),
    "reward_safety.csv": ("controller", "rollout", "cumulative_reward", "outcome"),
}

VALIDATE_FILES = ("session.jsonl", "summary.json", "approval_trace.csv")
BOUNDARY_FILES = ("boundary.csv", "boundary_summary.json")
CALIBRATE_FILES = ("calibration.csv",)
SWEEP_FILES = ("stopping.csv", "comparison.csv", "progression.csv", "reward_safety.csv")

# Fixed sub-seed tags keep experiments on disjoint rollout streams.
_SWEEP_ORACLE = 0x0AC1E
_SWEEP_SESSION = 0x5E55


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, Decision):
        return value.value
    return str(value)


def write_csv(path: Path, name: str, rows: Iterable[Sequence]) -> Path:
    target = path / name
    with open(target, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SCHEMAS[name])
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return target


def read_csv(path: Path) -> list[dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def write_json(path: Path, data) -> Path:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    config: Config
    base_seed: int
    output_dir: Path
    parallelism: int = 1

    def __post_init__(self) -> None:
        if self.name not in COMMANDS:
            raise UsageError(f"unknown experiment {self.name!r}")
        if self.parallelism < 1:
            raise UsageError("parallelism must be >= 1")


def session_outcomes(
    policy: PolicySpec, config: Config, base_seed: int, workers: int = 1
) -> RolloutBatch:
    """The full ``n_max`` rollout budget for one validation session, in index order."""
    return run_rollouts(
        policy,
        config.conditions,
        config.thresholds,
        base_seed,
        config.validation.n_max,
        limits=config.limits,
        workers=workers,
    )


def run_session(outcomes: Iterable[int], validation: ValidationConfig) -> ValidationSession:
    return ValidationSession.replay((int(y) for y in outcomes), validation)


def cmd_validate(spec: ExperimentSpec, trajectories: int = 0) -> dict:
    out = spec.output_dir
    out.mkdir(parents=True, exist_ok=True)
    cfg = spec.config
    batch = session_outcomes(cfg.policy, cfg, spec.base_seed, spec.parallelism)
    session = run_session(batch.outcome, cfg.validation)
    session.write_jsonl(out / "session.jsonl")
    write_csv(out, "approval_trace.csv", ((e.n, e.q) for e in session.history))
    summary = session.summary()
    summary["policy"] = cfg.policy.name
    summary["base_seed"] = spec.base_seed
    summary["validation_saving"] = validation_saving([stopping_time(session)], cfg.validation.n_max)
    write_json(out / "summary.json", summary)

    if trajectories and cfg.policy.kind is not PolicyKind.SYNTHETIC_BERNOULLI:
        tdir = out / "trajectories"
        tdir.mkdir(exist_ok=True)
        seeds = rollout_seeds(spec.base_seed, np.arange(min(trajectories, len(batch)), dtype=np.uint64))
        for i, seed in enumerate(seeds):
            condition = sample_operating_condition(cfg.conditions, int(seed))
            _, rows = trace_rollout(cfg.policy, condition, cfg.thresholds, cfg.limits)
            write_trajectory_csv(rows, tdir / f"rollout_{i + 1:04d}.csv")
    log.info("validate: %s at n=%s", summary["final_decision"], summary["stopping_time"])
    return summary


def boundary_rows(validation: ValidationConfig, p0: float) -> list[tuple]:
    n = validation.n_max
    rows = []
    cfg = replace(validation, p0=p0)
    for s in range(n + 1):
        q = approval_probability(posterior_update(validation.prior, s, n - s), p0)
        rows.append((p0, n, s, s / n, q, decide(q, n, cfg), empirical_rule(s, n, p0)))
    return rows


def minimal_approving_successes(validation: ValidationConfig, p0: float | None = None) -> int | None:
    """Smallest success count out of ``n_max`` whose posterior clears ``tau_A``."""
    p0 = validation.p0 if p0 is None else p0
    for row in boundary_rows(validation, p0):
        if row[5] is Decision.APPROVE:
            return row[2]
    return None


def cmd_boundary(spec: ExperimentSpec) -> dict:
    out = spec.output_dir
    out.mkdir(parents=True, exist_ok=True)
    validation = spec.config.validation
    grid = sorted(set(spec.config.experiment.boundary_p0_grid) | {validation.p0})
    rows = [row for p0 in grid for row in boundary_rows(validation, p0)]
    write_csv(out, "boundary.csv", rows)
    summary = {
        "n": validation.n_max,
        "p0": validation.p0,
        "tau_A": validation.tau_A,
        "minimal_approving_S": minimal_approving_successes(validation),
        "minimal_approving_S_by_p0": {repr(p0): minimal_approving_successes(validation, p0) for p0 in grid},
    }
    write_json(out / "boundary_summary.json", summary)
    return summary


def calibration_outcomes(true_p: float, sessions: int, n_max: int, base_seed: int) -> np.ndarray:
    """Outcome matrix for ``sessions`` synthetic sessions; row ``k`` uses rollouts ``k*n_max ...``."""
    policy = PolicySpec(kind=PolicyKind.SYNTHETIC_BERNOULLI, true_p=true_p)
    seeds = rollout_seeds(base_seed, np.arange(sessions * n_max, dtype=np.uint64))
    return synthetic_outcomes(policy, seeds).reshape(sessions, n_max)


def calibrate(
    true_ps: Sequence[float], sessions: int, validation: ValidationConfig, base_seed: int
) -> list[tuple]:
    table = decision_table(validation)
    rows = []
    for j, p in enumerate(true_ps):
        outcomes = calibration_outcomes(p, sessions, validation.n_max, rng.derive_key(base_seed, j))
        result = run_sessions(outcomes, validation, table)
        decisions = result.decisions
        rows.append(
            (
                float(p),
                sessions,
                sum(d is Decision.APPROVE for d in decisions) / sessions,
                sum(d is Decision.REJECT for d in decisions) / sessions,
                sum(d is Decision.CONTINUE for d in decisions) / sessions,
                float(result.stopping_times.mean()),
                validation_saving(result.stopping_times.tolist(), validation.n_max),
            )
        )
    return rows


def cmd_calibrate(spec: ExperimentSpec) -> list[tuple]:
    out = spec.output_dir
    out.mkdir(parents=True, exist_ok=True)
    exp = spec.config.experiment
    rows = calibrate(exp.calibration_true_p, exp.calibration_sessions, spec.config.validation, spec.base_seed)
    write_csv(out, "calibration.csv", rows)
    return rows


@dataclass(frozen=True)
class SweepRow:
    controller: str
    quality: float
    success: float
    success_se: float
    empirical_decision: Decision
    q_N: float
    bayesian_decision: Decision
    q_full_budget: float
    stopping_rollout: int
    session_success_rate: float
    mean_reward: float


def sweep(spec: ExperimentSpec) -> tuple[list[SweepRow], dict[str, RolloutBatch], dict[str, ValidationSession]]:
    cfg = spec.config
    lad = cfg.experiment.ladder
    members = checkpoint_ladder(lad.count, lad.quality_low, lad.quality_high, template=cfg.policy)
    oracle_seed = rng.derive_key(spec.base_seed, _SWEEP_ORACLE)
    rows, batches, sessions = [], {}, {}
    for i, member in enumerate(members):
        oracle = run_rollouts(
            member,
            cfg.conditions,
            cfg.thresholds,
            oracle_seed,
            cfg.experiment.oracle_rollouts,
            limits=cfg.limits,
            workers=spec.parallelism,
        )
        p_hat = oracle.successes / len(oracle)
        batch = session_outcomes(member, cfg, rng.derive_key(spec.base_seed, _SWEEP_SESSION, i), spec.parallelism)
        session = run_session(batch.outcome, cfg.validation)
        rows.append(
            SweepRow(
                controller=member.name,
                quality=member.quality,
                success=p_hat,
                success_se=float(np.sqrt(p_hat * (1.0 - p_hat) / len(oracle))),
                empirical_decision=Decision.APPROVE if p_hat >= cfg.validation.p0 else Decision.REJECT,
                q_N=session.q,
                bayesian_decision=session.final_decision,
                q_full_budget=approval_probability(
                    posterior_update(cfg.validation.prior, batch.successes, len(batch) - batch.successes),
                    cfg.validation.p0,
                ),
                stopping_rollout=stopping_time(session),
                session_success_rate=session.empirical_rate,
                mean_reward=float(batch.reward.mean()),
            )
        )
        batches[member.name] = batch
        sessions[member.name] = session
        log.info("sweep %s: p_hat=%.4f %s at %d", member.name, p_hat, session.final_decision.value, stopping_time(session))
    return rows, batches, sessions


def cmd_sweep(spec: ExperimentSpec) -> list[SweepRow]:
    out = spec.output_dir
    out.mkdir(parents=True, exist_ok=True)
    rows, batches, sessions = sweep(spec)
    write_csv(out, "stopping.csv", ((r.controller, r.stopping_rollout, r.bayesian_decision) for r in rows))
    write_csv(
        out,
        "comparison.csv",
        (
            (
                r.controller,
                r.quality,
                r.success,
                r.success_se,
                r.empirical_decision,
                r.q_N,
                r.bayesian_decision,
                r.q_full_budget,
            )
            for r in rows
        ),
    )
    write_csv(
        out,
        "progression.csv",
        ((r.controller, r.quality, r.mean_reward, r.success, r.session_success_rate, r.q_N) for r in rows),
    )
    write_csv(
        out,
        "reward_safety.csv",
        (
            (name, i + 1, float(batch.reward[i]), int(batch.outcome[i]))
            for name, batch in batches.items()
            for i in range(len(batch))
        ),
    )
    sdir = out / "sessions"
    sdir.mkdir(exist_ok=True)
    for name, session in sessions.items():
        session.write_jsonl(sdir / f"{name}.jsonl")
    return rows


def _svg_line_chart(
    points: Sequence[tuple[float, float]],
    x_range: tuple[float, float],
    title: str,
    x_label: str,
    y_label: str,
    hlines: Sequence[float] = (),
) -> str:
    width, height, pad = 480, 300, 48
    x0, x1 = x_range
    span = (x1 - x0) or 1.0

    def sx(x: float) -> float:
        return pad + (x - x0) / span * (width - 2 * pad)

    def sy(y: float) -> float:
        return height - pad - y * (height - 2 * pad)

    poly = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in points)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'data-x-min="{x0:g}" data-x-max="{x1:g}">',
        f'<text x="{width / 2}" y="20" text-anchor="middle" font-size="14">{title}</text>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        f'<text class="x-tick" x="{sx(x0):.2f}" y="{height - pad + 16}" text-anchor="middle" font-size="11">{x0:g}</text>',
        f'<text class="x-tick" x="{sx(x1):.2f}" y="{height - pad + 16}" text-anchor="middle" font-size="11">{x1:g}</text>',
        f'<text x="{pad - 6}" y="{sy(0.0):.2f}" text-anchor="end" font-size="11">0</text>',
        f'<text x="{pad - 6}" y="{sy(1.0):.2f}" text-anchor="end" font-size="11">1</text>',
        f'<text x="{width / 2}" y="{height - 8}" text-anchor="middle" font-size="12">{x_label}</text>',
        f'<text x="14" y="{height / 2}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 14 {height / 2})">{y_label}</text>',
    ]
    for h in hlines:
        parts.append(
            f'<line x1="{pad}" y1="{sy(h):.2f}" x2="{width - pad}" y2="{sy(h):.2f}" stroke="gray" stroke-dasharray="4 3"/>'
        )
    parts.append(f'<polyline fill="none" stroke="steelblue" stroke-width="1.5" points="{poly}"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def cmd_report(spec: ExperimentSpec) -> Path:
    """Collect whatever experiment outputs exist in the output directory into ``report.md``."""
    out = spec.output_dir
    groups = {
        "validate": VALIDATE_FILES,
        "boundary": BOUNDARY_FILES,
        "calibrate": CALIBRATE_FILES,
        "sweep": SWEEP_FILES,
    }
    present = {name: all((out / f).is_file() for f in files) for name, files in groups.items()}
    if not any(present.values()):
        expected = ", ".join(f for files in groups.values() for f in files)
        raise FileNotFoundError(f"no experiment outputs found in {out}; expected any complete set of: {expected}")

    validation = spec.config.validation
    lines = ["# Deployment validation report", ""]
    if present["validate"]:
        history = read_history_jsonl(out / "session.jsonl")
        summary = json.loads((out / "summary.json").read_text(encoding="utf-8"))
        last = history[-1]
        lines += [
            "## Sequential validation",
            "",
            f"- Policy: {summary.get('policy', 'unknown')}",
            f"- Final decision: {last.decision.value}",
            f"- Stopping rollout: {last.n}",
            f"- Successes / failures: {last.successes} / {last.failures}",
            f"- Posterior approval probability q_N: {last.q:.4f}",
            f"- Status: {summary['status']}",
            "",
        ]
        (out / "approval_trace.svg").write_text(
            _svg_line_chart(
                [(e.n, e.q) for e in history],
                (0, validation.n_max),
                "Posterior approval probability",
                "rollouts n",
                "q_n",
                hlines=(validation.tau_A, validation.tau_R),
            ),
            encoding="utf-8",
        )
    if present["boundary"]:
        rows = read_csv(out / "boundary.csv")
        bsum = json.loads((out / "boundary_summary.json").read_text(encoding="utf-8"))
        main = [r for r in rows if float(r["p0"]) == bsum["p0"]]
        n = int(bsum["n"])
        lines += [
            "## Approval boundary",
            "",
            f"- Minimal approving successes out of {n} at p0={bsum['p0']}: {bsum['minimal_approving_S']}",
            "",
        ]
        (out / "boundary.svg").write_text(
            _svg_line_chart(
                [(int(r["S"]), float(r["q"])) for r in main],
                (0, n),
                "Approval probability at n = n_max",
                "successes S",
                "q",
                hlines=(validation.tau_A,),
            ),
            encoding="utf-8",
        )
    if present["calibrate"]:
        lines += ["## Calibration", "", "| true p | approve | reject | exhausted | mean N |", "|---|---|---|---|---|"]
        for r in read_csv(out / "calibration.csv"):
            lines.append(
                f"| {float(r['true_p']):.4g} | {float(r['approve_freq']):.4f} | {float(r['reject_freq']):.4f} "
                f"| {float(r['exhaust_freq']):.4f} | {float(r['mean_stopping_time']):.1f} |"
            )
        lines.append("")
    if present["sweep"]:
        stops = {r["controller"]: r for r in read_csv(out / "stopping.csv")}
        lines += [
            "## Checkpoint ladder",
            "",
            "| controller | success | empirical | q_N | Bayesian | stopping rollout |",
            "|---|---|---|---|---|---|",
        ]
        for r in read_csv(out / "comparison.csv"):
            lines.append(
                f"| {r['controller']} | {100 * float(r['success']):.1f}% | {r['empirical_decision']} "
                f"| {float(r['q_N']):.4f} | {r['bayesian_decision']} | {stops[r['controller']]['stopping_rollout']} |"
            )
        lines.append("")
    report = out / "report.md"
    report.write_text("\n".join(lines), encoding="utf-8")
    return report


COMMANDS = {
    "validate": cmd_validate,
    "boundary": cmd_boundary,
    "calibrate": cmd_calibrate,
    "sweep": cmd_sweep,
    "report": cmd_report,
}
