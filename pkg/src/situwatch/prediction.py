"""Decision layer: kNN labeling against the baseline registry and the
hysteresis alert state machine.

Both operations are pure transition functions over explicit values; the
caller owns the state and must apply transitions for one stream in order.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Mapping, Sequence

from .errors import (
    EmptyRegistryError,
    InvalidConfigError,
    KTooLargeError,
    UnknownBaselineError,
)
from .similarity import SimilarityConfig, SimilarityReport, situation_similarity
from .situation import Baseline, Situation

BEST_MATCH = "best-match"

DEFAULT_THETA_ON = 85.0
DEFAULT_THETA_OFF = 70.0
DEFAULT_MIN_CONSECUTIVE = 2


@dataclass(frozen=True)
class AlertPolicy:
    """Dual thresholds with debounce.

    Ranks at or above ``theta_on`` arm and (after ``min_consecutive`` hits)
    fire; a firing alert survives dips down to ``theta_off`` and clears only
    below it, so marginal ranks neither flap nor clear an active alert.
    """

    theta_on: float = DEFAULT_THETA_ON
    theta_off: float = DEFAULT_THETA_OFF
    min_consecutive: int = DEFAULT_MIN_CONSECUTIVE
    baseline_id: str = BEST_MATCH

    def __post_init__(self):
        if not (0.0 < self.theta_on <= 100.0):
            raise InvalidConfigError("theta_on", f"must be in (0, 100], got {self.theta_on}")
        if not (0.0 <= self.theta_off < 100.0):
            raise InvalidConfigError("theta_off", f"must be in [0, 100), got {self.theta_off}")
        if self.theta_off >= self.theta_on:
            raise InvalidConfigError(
                "theta_off", f"must be strictly below theta_on ({self.theta_off} >= {self.theta_on})"
            )
        if self.min_consecutive < 1:
            raise InvalidConfigError(
                "min_consecutive", f"must be >= 1, got {self.min_consecutive}"
            )


@dataclass(frozen=True)
class Alert:
    """A predicted-event notification."""

    alert_id: str
    raised_at: float
    baseline_id: str
    rank_percent: float
    predicted_event_time: float
    cleared_at: float | None = None


@dataclass(frozen=True)
class AlertCleared:
    """Emitted when a firing alert drops below theta_off."""

    alert: Alert


class AlertStatus(str, Enum):
    IDLE = "idle"
    ARMED = "armed"  # some qualifying hits, not yet min_consecutive
    FIRING = "firing"


@dataclass(frozen=True)
class AlertState:
    status: AlertStatus = AlertStatus.IDLE
    consecutive_hits: int = 0
    active_alert: Alert | None = None


def step_alert(
    state: AlertState,
    report: SimilarityReport,
    policy: AlertPolicy,
    now: float,
    baseline: Baseline,
) -> tuple[AlertState, Alert | AlertCleared | None]:
    """Advance the alert state machine by one observed rank.

    Pure transition: a rank at or above theta_on increments the hit count and
    fires once min_consecutive is reached; while firing, only a rank below
    theta_off clears.  The emission stream of any run therefore alternates
    Alert / AlertCleared.  The predicted event time anchors on the observed
    window's end plus the baseline's lead time.
    """
    rank = report.aggregate_percent
    if state.status is AlertStatus.FIRING:
        if rank < policy.theta_off:
            cleared = replace(state.active_alert, cleared_at=now)
            return AlertState(), AlertCleared(cleared)
        return state, None

    if rank >= policy.theta_on:
        hits = state.consecutive_hits + 1
        if hits >= policy.min_consecutive:
            alert = Alert(
                alert_id=f"{report.baseline_id}@{now:.3f}",
                raised_at=now,
                baseline_id=report.baseline_id,
                rank_percent=rank,
                predicted_event_time=report.window.t_end + baseline.lead_time,
            )
            return (
                AlertState(
                    status=AlertStatus.FIRING,
                    consecutive_hits=policy.min_consecutive,
                    active_alert=alert,
                ),
                alert,
            )
        return AlertState(status=AlertStatus.ARMED, consecutive_hits=hits), None

    return AlertState(), None


@dataclass(frozen=True)
class Neighbor:
    baseline_id: str
    label: str
    percent: float


@dataclass(frozen=True)
class Classification:
    label: str
    confidence: float
    neighbors: tuple[Neighbor, ...]


def knn_classify(
    query: Situation,
    registry: Sequence[Baseline],
    k: int,
    cfg: SimilarityConfig,
) -> Classification:
    """Label a situation by majority vote among its k nearest baselines.

    Neighbors rank by aggregate percent descending with baseline_id as the
    tie-break; label ties break by higher summed percent, then
    lexicographically.  confidence is the winning label's vote share of k.
    """
    if not registry:
        raise EmptyRegistryError("cannot classify against an empty registry")
    if not 1 <= k <= len(registry):
        raise KTooLargeError(f"k={k} outside [1, {len(registry)}]")
    scored = [
        Neighbor(
            baseline_id=b.baseline_id,
            label=b.label,
            percent=situation_similarity(query, b, cfg).aggregate_percent,
        )
        for b in registry
    ]
    scored.sort(key=lambda nb: (-nb.percent, nb.baseline_id))
    top = scored[:k]
    votes: dict[str, int] = {}
    summed: dict[str, float] = {}
    for nb in top:
        votes[nb.label] = votes.get(nb.label, 0) + 1
        summed[nb.label] = summed.get(nb.label, 0.0) + nb.percent
    winner = min(votes, key=lambda lab: (-votes[lab], -summed[lab], lab))
    return Classification(
        label=winner, confidence=votes[winner] / k, neighbors=tuple(scored)
    )


def resolve_baseline(
    registry: Sequence[Baseline],
    policy: AlertPolicy,
    reports: Mapping[str, SimilarityReport],
) -> str:
    """Pick the baseline the alert machine watches this window.

    A fixed policy id must exist in the registry; "best-match" selects the
    highest aggregate percent, ties broken lexicographically on id.
    """
    if not registry or not reports:
        raise EmptyRegistryError("resolve_baseline needs a non-empty registry and reports")
    if policy.baseline_id != BEST_MATCH:
        if all(b.baseline_id != policy.baseline_id for b in registry):
            raise UnknownBaselineError(f"policy names unknown baseline {policy.baseline_id!r}")
        return policy.baseline_id
    return min(reports, key=lambda bid: (-reports[bid].aggregate_percent, bid))
