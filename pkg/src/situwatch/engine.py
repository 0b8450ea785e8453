"""The monitoring loop: ingestion -> windowing -> similarity -> alerting.

The engine owns all mutable state (cursor, registry, alert machines, logs)
and advances it only through ``tick``.  Every timestamp it acts on is a data
timestamp, never an arrival time, so replaying the same stream at any speed
reproduces the same reports and the same alert log.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Iterable

from .errors import SituwatchError, UnknownBaselineError
from .ingest import StreamCursor, emit_windows
from .prediction import (
    Alert,
    AlertCleared,
    AlertPolicy,
    AlertState,
    resolve_baseline,
    step_alert,
)
from .similarity import SimilarityConfig, SimilarityReport, situation_similarity
from .situation import (
    Baseline,
    ChannelSpec,
    GapPolicy,
    Provenance,
    Sample,
    Situation,
    snapshot_baseline,
)

logger = logging.getLogger(__name__)


@dataclass
class EngineConfig:
    """Shape of the windows the engine evaluates."""

    specs: tuple[ChannelSpec, ...]
    duration: float = 900.0
    n_samples: int = 90
    stride: float = 60.0
    retention: float = 7200.0
    gap_policy: GapPolicy = GapPolicy.STRICT
    provenance: Provenance = Provenance.LIVE


@dataclass(frozen=True)
class TickResult:
    situations: tuple[Situation, ...]
    reports: tuple[SimilarityReport, ...]
    emissions: tuple[Alert | AlertCleared, ...]


class SituationEngine:
    """Single-owner pipeline state; callers must serialize all mutations."""

    def __init__(
        self,
        config: EngineConfig,
        policy: AlertPolicy | None = None,
        similarity: SimilarityConfig | None = None,
    ):
        self.config = config
        self.policy = policy or AlertPolicy()
        self.similarity = similarity or SimilarityConfig(
            channel_weights={s.channel_id: s.weight for s in config.specs}
        )
        self.cursor = StreamCursor(retention=config.retention, stride=config.stride)
        self.registry: list[Baseline] = []
        self.alert_states: dict[str, AlertState] = {}
        self.latest_reports: dict[str, SimilarityReport] = {}
        self.alert_log: list[Alert] = []
        self._baseline_seq = itertools.count(1)

    # -- registry ----------------------------------------------------------

    def add_baseline(self, baseline: Baseline) -> None:
        if any(b.baseline_id == baseline.baseline_id for b in self.registry):
            raise ValueError(f"duplicate baseline id {baseline.baseline_id!r}")
        self.registry.append(baseline)
        self.alert_states[baseline.baseline_id] = AlertState()

    def remove_baseline(self, baseline_id: str) -> Baseline:
        for i, b in enumerate(self.registry):
            if b.baseline_id == baseline_id:
                del self.registry[i]
                self.alert_states.pop(baseline_id, None)
                self.latest_reports.pop(baseline_id, None)
                return b
        raise UnknownBaselineError(f"no baseline {baseline_id!r}")

    def get_baseline(self, baseline_id: str) -> Baseline:
        for b in self.registry:
            if b.baseline_id == baseline_id:
                return b
        raise UnknownBaselineError(f"no baseline {baseline_id!r}")

    def snapshot(
        self,
        event_time: float,
        label: str,
        lead_time: float = 300.0,
        duration: float | None = None,
        n: int | None = None,
    ) -> Baseline:
        """Freeze a baseline out of the live buffer and register it."""
        seq = next(self._baseline_seq)
        baseline = snapshot_baseline(
            self.cursor,
            self.config.specs,
            event_time=event_time,
            lead_time=lead_time,
            duration=self.config.duration if duration is None else duration,
            n=self.config.n_samples if n is None else n,
            label=label,
            baseline_id=f"bl-{seq:04d}-{event_time:.0f}",
            created_at=event_time,
            gap_policy=self.config.gap_policy,
            provenance=self.config.provenance,
        )
        self.add_baseline(baseline)
        return baseline

    # -- ingestion and the loop --------------------------------------------

    def ingest(self, samples: Iterable[Sample]) -> tuple[int, int]:
        """Push samples into the cursor; returns (accepted, rejected)."""
        accepted = rejected = 0
        push = self.cursor.push_sample
        for s in samples:
            if push(s).accepted:
                accepted += 1
            else:
                rejected += 1
        return accepted, rejected

    def watermark(self) -> float:
        return self.cursor.watermark([s.channel_id for s in self.config.specs])

    def tick(self, now: float | None = None) -> TickResult:
        """Drain due windows and run each through similarity and alerting.

        ``now`` caps which windows are due (data time); by default every
        window the watermark has reached is drained.  Per-window errors are
        logged and skipped; the tick itself never aborts.
        """
        if now is None:
            now = math.inf
        situations = emit_windows(
            self.cursor,
            now,
            self.config.duration,
            self.config.n_samples,
            self.config.specs,
            gap_policy=self.config.gap_policy,
            provenance=self.config.provenance,
        )
        new_reports: list[SimilarityReport] = []
        emissions: list[Alert | AlertCleared] = []
        for situation in situations:
            if not self.registry:
                continue
            reports: dict[str, SimilarityReport] = {}
            for b in self.registry:
                try:
                    reports[b.baseline_id] = situation_similarity(situation, b, self.similarity)
                except SituwatchError as exc:
                    logger.warning(
                        "similarity against %s failed for window ending %.3f: %s",
                        b.baseline_id,
                        situation.window.t_end,
                        exc,
                    )
            if not reports:
                continue
            self.latest_reports.update(reports)
            new_reports.extend(reports[b.baseline_id] for b in self.registry if b.baseline_id in reports)

            data_now = situation.window.t_end
            try:
                chosen = resolve_baseline(self.registry, self.policy, reports)
            except SituwatchError as exc:
                logger.warning("baseline resolution failed: %s", exc)
                continue
            # The resolved machine steps first; any other machine that is
            # still firing also sees its own report so it can clear.
            step_ids = [chosen] + sorted(
                bid
                for bid, st in self.alert_states.items()
                if bid != chosen and st.active_alert is not None and bid in reports
            )
            for bid in step_ids:
                state = self.alert_states.get(bid, AlertState())
                new_state, emitted = step_alert(
                    state, reports[bid], self.policy, data_now, self.get_baseline(bid)
                )
                self.alert_states[bid] = new_state
                if isinstance(emitted, Alert):
                    self.alert_log.append(emitted)
                    emissions.append(emitted)
                elif isinstance(emitted, AlertCleared):
                    self._mark_cleared(emitted.alert)
                    emissions.append(emitted)
        return TickResult(tuple(situations), tuple(new_reports), tuple(emissions))

    def _mark_cleared(self, cleared: Alert) -> None:
        for i in range(len(self.alert_log) - 1, -1, -1):
            if self.alert_log[i].alert_id == cleared.alert_id:
                self.alert_log[i] = cleared
                return
        self.alert_log.append(cleared)  # defensive; a raise always precedes a clear

    def alerts_since(self, since: float = 0.0) -> list[Alert]:
        return [a for a in self.alert_log if a.raised_at >= since]
