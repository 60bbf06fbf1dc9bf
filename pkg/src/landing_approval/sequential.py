"""Sequential approve / reject / continue validation over streaming rollout outcomes."""

from __future__ import annotations

import enum
import json
from collections.abc import Iterable, Sequence
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from landing_approval.beta import BetaParams, approval_probability, posterior_update
from landing_approval.errors import ConfigError, UsageError


class Decision(str, enum.Enum):
    APPROVE = "Approve"
    REJECT = "Reject"
    CONTINUE = "Continue"


class SessionStatus(str, enum.Enum):
    RUNNING = "running"
    APPROVED = "approved"
    REJECTED = "rejected"
    EXHAUSTED = "exhausted"


@dataclass(frozen=True)
class ValidationConfig:
    """Decision parameters; defaults are the reference protocol settings."""

    p0: float = 0.95
    tau_A: float = 0.95
    tau_R: float = 0.05
    prior: BetaParams = field(default_factory=BetaParams)
    n_min: int = 30
    n_max: int = 100

    def __post_init__(self) -> None:
        if not (0.0 < self.p0 < 1.0):
            raise ConfigError(f"p0 must lie in (0, 1), got {self.p0}")
        if not (0.0 < self.tau_R < self.tau_A < 1.0):
            raise ConfigError(
                f"thresholds must satisfy 0 < tau_R < tau_A < 1, got tau_R={self.tau_R}, tau_A={self.tau_A}"
            )
        if not (1 <= self.n_min <= self.n_max):
            raise ConfigError(f"need 1 <= n_min <= n_max, got n_min={self.n_min}, n_max={self.n_max}")


@dataclass(frozen=True)
class HistoryEntry:
    n: int
    outcome: int
    successes: int
    failures: int
    alpha: float
    beta: float
    q: float
    decision: Decision

    def to_record(self) -> dict:
        return {
            "n": self.n,
            "outcome": self.outcome,
            "S": self.successes,
            "F": self.failures,
            "alpha": self.alpha,
            "beta": self.beta,
            "q": self.q,
            "decision": self.decision.value,
        }

    @classmethod
    def from_record(cls, record: dict) -> HistoryEntry:
        return cls(
            n=int(record["n"]),
            outcome=int(record["outcome"]),
            successes=int(record["S"]),
            failures=int(record["F"]),
            alpha=float(record["alpha"]),
            beta=float(record["beta"]),
            q=float(record["q"]),
            decision=Decision(record["decision"]),
        )


def decide(q: float, n: int, config: ValidationConfig) -> Decision:
    """Apply the threshold rule at stage ``n``, suppressed below ``n_min``."""
    if n < config.n_min:
        return Decision.CONTINUE
    if q >= config.tau_A:
        return Decision.APPROVE
    if q <= config.tau_R:
        return Decision.REJECT
    return Decision.CONTINUE


class ValidationSession:
    """Single-writer state machine accumulating binary rollout outcomes.

    Outcomes must be ingested in rollout-index order.  Once the session is
    approved, rejected or exhausted it refuses further evidence.
    """

    def __init__(self, config: ValidationConfig | None = None) -> None:
        self.config = config or ValidationConfig()
        self.successes = 0
        self.failures = 0
        self.posterior = self.config.prior
        self.history: list[HistoryEntry] = []
        self.status = SessionStatus.RUNNING

    @property
    def n(self) -> int:
        return self.successes + self.failures

    @property
    def q(self) -> float:
        return approval_probability(self.posterior, self.config.p0)

    @property
    def empirical_rate(self) -> float:
        if self.n == 0:
            raise UsageError("empirical rate is undefined before any outcome")
        return self.successes / self.n

    @property
    def final_decision(self) -> Decision | None:
        return self.history[-1].decision if self.history else None

    @property
    def terminated(self) -> bool:
        return self.status is not SessionStatus.RUNNING

    def ingest(self, outcome: int | bool) -> Decision:
        if self.terminated:
            raise UsageError(f"cannot ingest into a {self.status.value} session")
        if outcome not in (0, 1):
            raise ValueError(f"outcome must be 0 or 1, got {outcome!r}")
        outcome = int(outcome)
        if outcome:
            self.successes += 1
        else:
            self.failures += 1
        self.posterior = posterior_update(self.config.prior, self.successes, self.failures)
        q = self.q
        decision = decide(q, self.n, self.config)
        self.history.append(
            HistoryEntry(
                n=self.n,
                outcome=outcome,
                successes=self.successes,
                failures=self.failures,
                alpha=self.posterior.alpha,
                beta=self.posterior.beta,
                q=q,
                decision=decision,
            )
        )
        if decision is Decision.APPROVE:
            self.status = SessionStatus.APPROVED
        elif decision is Decision.REJECT:
            self.status = SessionStatus.REJECTED
        elif self.n >= self.config.n_max:
            self.status = SessionStatus.EXHAUSTED
        return decision

    def run(self, outcomes: Iterable[int]) -> Decision | None:
        """Ingest outcomes until the session terminates or the stream ends."""
        for outcome in outcomes:
            self.ingest(outcome)
            if self.terminated:
                break
        return self.final_decision

    @classmethod
    def replay(cls, outcomes: Iterable[int], config: ValidationConfig | None = None) -> ValidationSession:
        session = cls(config)
        session.run(outcomes)
        return session

    def records(self) -> list[dict]:
        return [entry.to_record() for entry in self.history]

    def write_jsonl(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for record in self.records():
                fh.write(json.dumps(record) + "\n")

    def summary(self) -> dict:
        return {
            "status": self.status.value,
            "final_decision": self.final_decision.value if self.final_decision else None,
            "stopping_time": stopping_time(self) if self.terminated else None,
            "successes": self.successes,
            "failures": self.failures,
            "empirical_rate": self.empirical_rate if self.n else None,
            "q": self.q,
            "config": {**asdict(self.config), "prior": asdict(self.config.prior)},
        }


def read_history_jsonl(path: str | Path) -> list[HistoryEntry]:
    with open(path, encoding="utf-8") as fh:
        return [HistoryEntry.from_record(json.loads(line)) for line in fh if line.strip()]


def stopping_time(session: ValidationSession) -> int:
    """Rollout count at which the session stopped; ``n_max`` when exhausted."""
    if not session.terminated:
        raise UsageError("stopping time is undefined while the session is running")
    if session.status is SessionStatus.EXHAUSTED:
        return session.config.n_max
    return session.n


def validation_saving(stopping_times: Sequence[int], n_max: int) -> float:
    """Fraction of the fixed rollout budget avoided by stopping early."""
    if len(stopping_times) == 0:
        raise UsageError("validation saving needs at least one stopping time")
    if any(t > n_max or t < 0 for t in stopping_times):
        raise ValueError(f"stopping times must lie in [0, {n_max}]")
    return 1.0 - (sum(stopping_times) / len(stopping_times)) / n_max


def empirical_rule(successes: int, n: int, p0: float) -> Decision:
    """Plug-in baseline: approve whenever the observed success rate reaches ``p0``."""
    if n < 1:
        raise ValueError("empirical rule needs n >= 1")
    if not (0 <= successes <= n):
        raise ValueError(f"successes must lie in [0, {n}]")
    return Decision.APPROVE if successes / n >= p0 else Decision.REJECT


DECISION_CODES = (Decision.CONTINUE, Decision.APPROVE, Decision.REJECT)
_CODE = {d: i for i, d in enumerate(DECISION_CODES)}


def decision_table(config: ValidationConfig):
    """Decision code for every reachable ``(n, S)`` with ``1 <= n <= n_max``.

    Codes index :data:`DECISION_CODES`.  Entry ``[n, S]`` is only meaningful for
    ``S <= n``.
    """
    table = np.zeros((config.n_max + 1, config.n_max + 1), dtype=np.int8)
    for n in range(1, config.n_max + 1):
        for s in range(n + 1):
            q = approval_probability(posterior_update(config.prior, s, n - s), config.p0)
            table[n, s] = _CODE[decide(q, n, config)]
    return table


@dataclass(frozen=True)
class SessionBatchResult:
    decisions: list[Decision]
    stopping_times: np.ndarray
    successes: np.ndarray
    statuses: list[SessionStatus]


def run_sessions(outcomes, config: ValidationConfig | None = None, table=None) -> SessionBatchResult:
    """Run many independent sessions at once over an ``(sessions, n_max)`` 0/1 matrix.

    Equivalent to replaying each row through :class:`ValidationSession`.
    """
    config = config or ValidationConfig()
    outcomes = np.asarray(outcomes, dtype=np.int64)
    if outcomes.ndim != 2 or outcomes.shape[1] < config.n_max:
        raise ValueError(f"outcomes must have shape (sessions, >= {config.n_max})")
    if table is None:
        table = decision_table(config)
    s_cum = np.cumsum(outcomes[:, : config.n_max], axis=1)
    n_idx = np.arange(1, config.n_max + 1)
    codes = table[n_idx[None, :], s_cum]
    decided = codes != _CODE[Decision.CONTINUE]
    any_decided = decided.any(axis=1)
    first = np.where(any_decided, decided.argmax(axis=1), config.n_max - 1)
    rows = np.arange(len(outcomes))
    final_codes = codes[rows, first]
    stop = first + 1
    decisions = [DECISION_CODES[c] for c in final_codes]
    statuses = [
        SessionStatus.APPROVED if d is Decision.APPROVE
        else SessionStatus.REJECTED if d is Decision.REJECT
        else SessionStatus.EXHAUSTED
        for d in decisions
    ]
    return SessionBatchResult(
        decisions=decisions,
        stopping_times=stop,
        successes=s_cum[rows, first],
        statuses=statuses,
    )
