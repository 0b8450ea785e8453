"""The seeded desk-scale detection study.

There is no published dataset for this problem, so the study manufactures
its own ground truth: for each trial a paired baseline/live stream is drawn
from the scenario, the baseline stream's pre-event window becomes the stored
reference, and the live stream is monitored end to end through the real
pipeline.  A trial counts as a hit when an alert is raised inside the
pre-event signature window; any raise outside it is a false alert.  All
seeds derive from the scenario seed, so the study is a fixed, re-runnable
fixture rather than a statistical claim.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

from .engine import EngineConfig, SituationEngine
from .prediction import AlertPolicy
from .similarity import SimilarityConfig
from .simulator import Scenario, default_scenario, make_paired_trial
from .situation import ChannelSpec, Provenance, snapshot_baseline

DEFAULT_TRIALS = 50
STUDY_LEAD_TIME = 0.0  # the reference window ends at the event, ramp included


@dataclass(frozen=True)
class TrialOutcome:
    trial_index: int
    hit: bool  # an alert was raised inside the signature window
    false_alerts: int  # raises outside the signature window
    raise_times: tuple[float, ...]
    detection_advance: float | None  # seconds before the event of the first in-window raise
    rank_history: tuple[tuple[float, float], ...]  # (window end, aggregate percent)


@dataclass(frozen=True)
class StudyResult:
    scenario: Scenario
    policy: AlertPolicy
    similarity: SimilarityConfig
    outcomes: tuple[TrialOutcome, ...]
    elapsed_seconds: float

    @property
    def trials(self) -> int:
        return len(self.outcomes)

    @property
    def hit_rate(self) -> float:
        return sum(o.hit for o in self.outcomes) / self.trials

    @property
    def max_false_alerts(self) -> int:
        return max(o.false_alerts for o in self.outcomes)

    def summary(self) -> dict:
        advances = [o.detection_advance for o in self.outcomes if o.detection_advance is not None]
        return {
            "trials": self.trials,
            "hit_rate": self.hit_rate,
            "hits": sum(o.hit for o in self.outcomes),
            "max_false_alerts": self.max_false_alerts,
            "trials_with_false_alerts": sum(o.false_alerts > 0 for o in self.outcomes),
            "mean_detection_advance_s": sum(advances) / len(advances) if advances else None,
            "elapsed_seconds": self.elapsed_seconds,
        }


def run_trial(
    scenario: Scenario,
    trial_index: int,
    policy: AlertPolicy,
    similarity: SimilarityConfig,
    *,
    window_duration: float = 900.0,
    n_samples: int = 90,
    stride: float = 60.0,
    lead_time: float = STUDY_LEAD_TIME,
) -> TrialOutcome:
    trial = make_paired_trial(scenario, trial_index)
    event = scenario.events[0]
    specs = tuple(ChannelSpec(channel_id=c.channel_id) for c in scenario.channels)

    reference = snapshot_baseline(
        trial.baseline.samples,
        specs,
        event_time=event.event_time,
        lead_time=lead_time,
        duration=window_duration,
        n=n_samples,
        label="pain-precursor",
        baseline_id=f"trial-{trial_index:03d}",
        provenance=Provenance.SYNTHETIC,
    )

    engine = SituationEngine(
        EngineConfig(
            specs=specs,
            duration=window_duration,
            n_samples=n_samples,
            stride=stride,
            provenance=Provenance.SYNTHETIC,
        ),
        policy=policy,
        similarity=similarity,
    )
    engine.add_baseline(reference)
    engine.ingest(trial.live.samples)
    result = engine.tick()

    window_lo = event.event_time - event.signature_lead
    window_hi = event.event_time
    raises = tuple(a.raised_at for a in engine.alert_log)
    in_window = [t for t in raises if window_lo <= t <= window_hi]
    ranks = tuple(
        (r.window.t_end, r.aggregate_percent) for r in result.reports
    )
    return TrialOutcome(
        trial_index=trial_index,
        hit=bool(in_window),
        false_alerts=len(raises) - len(in_window),
        raise_times=raises,
        detection_advance=(event.event_time - in_window[0]) if in_window else None,
        rank_history=ranks,
    )


def run_detection_study(
    scenario: Scenario | None = None,
    trials: int = DEFAULT_TRIALS,
    policy: AlertPolicy | None = None,
    similarity: SimilarityConfig | None = None,
    **trial_kwargs,
) -> StudyResult:
    scenario = scenario or default_scenario()
    policy = policy or AlertPolicy()
    similarity = similarity or SimilarityConfig()
    started = time.perf_counter()
    outcomes = tuple(
        run_trial(scenario, i, policy, similarity, **trial_kwargs) for i in range(trials)
    )
    return StudyResult(
        scenario=scenario,
        policy=policy,
        similarity=similarity,
        outcomes=outcomes,
        elapsed_seconds=time.perf_counter() - started,
    )
