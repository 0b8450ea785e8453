from __future__ import annotations

import math

import numpy as np
import pytest

from situwatch.engine import EngineConfig, SituationEngine
from situwatch.errors import InsufficientHistoryError, UnknownBaselineError
from situwatch.ingest import StreamCursor, emit_windows
from situwatch.prediction import Alert, AlertPolicy, AlertState, resolve_baseline, step_alert
from situwatch.similarity import SimilarityConfig, situation_similarity
from situwatch.simulator import default_scenario, generate
from situwatch.situation import ChannelSpec, Sample

HR = ChannelSpec(channel_id="hr")


def sine_samples(t0: float, t1: float, period: float = 60.0) -> list[Sample]:
    ts = np.arange(t0, t1 + 1e-9, 1.0)
    return [Sample(float(t), "hr", float(math.sin(2 * math.pi * t / period))) for t in ts]


def small_engine(**kwargs) -> SituationEngine:
    config = EngineConfig(specs=(HR,), duration=900.0, n_samples=90, stride=60.0)
    return SituationEngine(config, **kwargs)


class TestEngineBasics:
    def test_tick_without_windows_is_noop(self):
        engine = small_engine()
        engine.ingest(sine_samples(0.0, 100.0))
        result = engine.tick()
        assert result.situations == ()
        assert result.reports == ()
        assert result.emissions == ()
        assert engine.latest_reports == {}

    def test_identity_chain_fires_after_min_consecutive(self):
        engine = small_engine(policy=AlertPolicy(theta_on=85.0, theta_off=70.0, min_consecutive=2))
        engine.ingest(sine_samples(0.0, 900.0))
        engine.tick()
        engine.snapshot(event_time=900.0, label="pain", lead_time=0.0)
        engine.ingest(sine_samples(901.0, 960.0))
        r1 = engine.tick()
        assert len(r1.reports) == 1
        assert r1.reports[0].aggregate_percent == pytest.approx(100.0, abs=1e-9)
        assert r1.emissions == ()  # one hit, debounce at 2
        engine.ingest(sine_samples(961.0, 1020.0))
        r2 = engine.tick()
        assert len(r2.emissions) == 1
        alert = r2.emissions[0]
        assert isinstance(alert, Alert)
        assert alert.raised_at == 1020.0
        assert engine.alert_log == [alert]

    def test_snapshot_requires_history(self):
        engine = small_engine()
        engine.ingest(sine_samples(0.0, 100.0))
        with pytest.raises(InsufficientHistoryError):
            engine.snapshot(event_time=100.0, label="too-early", lead_time=0.0)

    def test_snapshot_ids_are_unique(self):
        engine = small_engine()
        engine.ingest(sine_samples(0.0, 1000.0))
        b1 = engine.snapshot(event_time=950.0, label="a", lead_time=0.0)
        b2 = engine.snapshot(event_time=950.0, label="b", lead_time=0.0)
        assert b1.baseline_id != b2.baseline_id

    def test_remove_baseline_clears_state(self):
        engine = small_engine()
        engine.ingest(sine_samples(0.0, 1000.0))
        b = engine.snapshot(event_time=950.0, label="a", lead_time=0.0)
        engine.remove_baseline(b.baseline_id)
        assert engine.registry == []
        assert b.baseline_id not in engine.alert_states
        with pytest.raises(UnknownBaselineError):
            engine.remove_baseline(b.baseline_id)

    def test_latest_reports_keys_subset_of_registry(self):
        engine = small_engine()
        engine.ingest(sine_samples(0.0, 1000.0))
        engine.snapshot(event_time=950.0, label="a", lead_time=0.0)
        engine.ingest(sine_samples(1001.0, 1200.0))
        engine.tick()
        registry_ids = {b.baseline_id for b in engine.registry}
        assert set(engine.latest_reports) <= registry_ids

    def test_now_caps_ticks(self):
        engine = small_engine()
        engine.ingest(sine_samples(0.0, 1100.0))
        r = engine.tick(now=960.0)
        assert [s.window.t_end for s in r.situations] == [900.0, 960.0]
        r2 = engine.tick()
        assert [s.window.t_end for s in r2.situations] == [1020.0, 1080.0]


class TestCompositionOracle:
    def test_thirty_tick_sequence_matches_hand_composed_pipeline(self):
        scenario = default_scenario()
        samples = generate(scenario).samples
        specs = tuple(ChannelSpec(channel_id=c.channel_id) for c in scenario.channels)
        config = EngineConfig(specs=specs, duration=900.0, n_samples=90, stride=60.0)
        policy = AlertPolicy(theta_on=85.0, theta_off=70.0, min_consecutive=2)
        sim_cfg = SimilarityConfig()

        engine = SituationEngine(
            EngineConfig(specs=specs, duration=900.0, n_samples=90, stride=60.0),
            policy=policy,
            similarity=sim_cfg,
        )
        # oracle state: raw module functions wired by hand
        oracle_cursor = StreamCursor(retention=config.retention, stride=config.stride)
        oracle_states: dict[str, AlertState] = {}
        oracle_emissions = []

        # one shared baseline built from the same stream prefix
        prefix = [s for s in samples if s.timestamp <= 1800.0]
        for s in prefix:
            engine.cursor.push_sample(s)
            oracle_cursor.push_sample(s)
        engine.tick(now=1800.0)
        list(emit_windows(oracle_cursor, 1800.0, 900.0, 90, specs))
        baseline = engine.snapshot(event_time=1800.0, label="pain", lead_time=0.0)
        oracle_states[baseline.baseline_id] = AlertState()

        rest = [s for s in samples if s.timestamp > 1800.0]
        chunk = 20.0
        t = 1800.0
        engine_results = []
        while t < scenario.duration:
            t += chunk
            batch = [s for s in rest if t - chunk < s.timestamp <= t]
            engine.ingest(batch)
            engine_results.extend(engine.tick().emissions)

            for s in batch:
                oracle_cursor.push_sample(s)
            for situation in emit_windows(oracle_cursor, math.inf, 900.0, 90, specs):
                reports = {
                    b.baseline_id: situation_similarity(situation, b, sim_cfg)
                    for b in [baseline]
                }
                chosen = resolve_baseline([baseline], policy, reports)
                state, emitted = step_alert(
                    oracle_states[chosen],
                    reports[chosen],
                    policy,
                    situation.window.t_end,
                    baseline,
                )
                oracle_states[chosen] = state
                if emitted is not None:
                    oracle_emissions.append(emitted)

        assert engine_results == oracle_emissions

    def test_tick_is_deterministic_replay(self):
        scenario = default_scenario()
        samples = generate(scenario).samples

        def run() -> list:
            specs = tuple(ChannelSpec(channel_id=c.channel_id) for c in scenario.channels)
            engine = SituationEngine(EngineConfig(specs=specs))
            prefix = [s for s in samples if s.timestamp <= 1800.0]
            engine.ingest(prefix)
            engine.tick()
            engine.snapshot(event_time=1800.0, label="pain", lead_time=0.0)
            engine.ingest([s for s in samples if s.timestamp > 1800.0])
            engine.tick()
            return engine.alert_log

        assert run() == run()


class TestMultiBaselineOrchestration:
    def _scripted_engine(self, monkeypatch, script):
        """Engine whose similarity scores follow a script: {baseline_id: [p0, p1, ...]}
        indexed by window order. Isolates tick's orchestration from the kernels."""
        from situwatch import engine as engine_mod
        from situwatch.similarity import ChannelScore, SimilarityReport

        counters = {}

        def fake_similarity(situation, baseline, cfg, *, computed_at=None):
            i = counters.get(baseline.baseline_id, 0)
            counters[baseline.baseline_id] = i + 1
            series = script[baseline.baseline_id]
            percent = series[min(i, len(series) - 1)]
            return SimilarityReport(
                baseline_id=baseline.baseline_id,
                window=situation.window,
                per_channel={"hr": ChannelScore(0.0, percent)},
                aggregate_percent=percent,
                method=cfg.method,
                computed_at=situation.window.t_end,
            )

        monkeypatch.setattr(engine_mod, "situation_similarity", fake_similarity)
        engine = small_engine(
            policy=AlertPolicy(theta_on=85.0, theta_off=70.0, min_consecutive=1)
        )
        engine.ingest(sine_samples(0.0, 1000.0))
        engine.tick()  # consume pre-registration windows
        for bid in script:
            b = engine.snapshot(event_time=950.0, label=bid, lead_time=0.0)
            # stable ids for the script
            engine.registry[-1] = type(b)(
                baseline_id=bid, situation=b.situation, event_time=b.event_time,
                lead_time=b.lead_time, label=b.label, created_at=b.created_at,
            )
            engine.alert_states[bid] = engine.alert_states.pop(b.baseline_id)
        return engine

    def test_firing_baseline_clears_after_best_match_moves_away(self, monkeypatch):
        # windows: a wins and fires, then b takes over while a collapses;
        # a's machine still sees its own report and must clear
        script = {"a": [90.0, 90.0, 50.0, 50.0], "b": [80.0, 80.0, 95.0, 95.0]}
        engine = self._scripted_engine(monkeypatch, script)
        emissions = []
        for upto in (1020.0, 1080.0, 1140.0, 1200.0):
            engine.ingest(sine_samples(engine.watermark() + 1.0, upto))
            emissions.extend(engine.tick().emissions)
        kinds = [
            (e.baseline_id if isinstance(e, Alert) else e.alert.baseline_id,
             "raise" if isinstance(e, Alert) else "clear")
            for e in emissions
        ]
        assert ("a", "raise") in kinds
        assert ("b", "raise") in kinds
        assert ("a", "clear") in kinds
        assert kinds.index(("a", "clear")) > kinds.index(("b", "raise")) - 2
        assert engine.alert_states["a"].active_alert is None
        assert engine.alert_states["b"].active_alert is not None

    def test_incomparable_baseline_logged_and_skipped(self, caplog):
        engine = small_engine()
        engine.ingest(sine_samples(0.0, 1000.0))
        engine.tick()
        good = engine.snapshot(event_time=950.0, label="good", lead_time=0.0)
        # a baseline over a different channel set cannot be compared in strict mode
        other_samples = [
            Sample(float(t), "spo2", 97.0) for t in np.arange(0.0, 1000.0, 1.0)
        ]
        foreign = snapshot_from(other_samples)
        engine.add_baseline(foreign)
        engine.ingest(sine_samples(1001.0, 1080.0))
        with caplog.at_level("WARNING"):
            result = engine.tick()
        assert {r.baseline_id for r in result.reports} == {good.baseline_id}
        assert any("similarity against" in rec.message for rec in caplog.records)


def snapshot_from(samples):
    from situwatch.situation import ChannelSpec, snapshot_baseline

    return snapshot_baseline(
        samples,
        [ChannelSpec(channel_id="spo2")],
        event_time=950.0,
        lead_time=0.0,
        duration=900.0,
        n=90,
        label="foreign",
        baseline_id="foreign-1",
    )
