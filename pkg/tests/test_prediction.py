from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from situwatch.errors import (
    EmptyRegistryError,
    InvalidConfigError,
    KTooLargeError,
    UnknownBaselineError,
)
from situwatch.prediction import (
    Alert,
    AlertCleared,
    AlertPolicy,
    AlertState,
    AlertStatus,
    knn_classify,
    resolve_baseline,
    step_alert,
)
from situwatch.similarity import ChannelScore, SimilarityConfig, SimilarityMethod, SimilarityReport, situation_similarity
from situwatch.situation import SituationWindow

from .conftest import random_situation
from .oracles import alert_reference
from .test_similarity import baseline_of


def report_with_rank(rank: float, baseline_id: str = "b", t_end: float = 900.0) -> SimilarityReport:
    return SimilarityReport(
        baseline_id=baseline_id,
        window=SituationWindow(t_start=t_end - 900.0, t_end=t_end, n_samples=90),
        per_channel={"hr": ChannelScore(distance=0.0, similarity_percent=rank)},
        aggregate_percent=rank,
        method=SimilarityMethod.DTW,
        computed_at=t_end,
    )


def run_machine(ranks, policy, baseline, t0=900.0, stride=60.0):
    """Drive step_alert over a rank sequence; returns the emissions."""
    state = AlertState()
    emitted = []
    for i, rank in enumerate(ranks):
        now = t0 + i * stride
        report = report_with_rank(rank, baseline_id=baseline.baseline_id, t_end=now)
        state, out = step_alert(state, report, policy, now, baseline)
        if out is not None:
            emitted.append((i, out))
    return emitted, state


@pytest.fixture
def baseline(rng):
    s, _ = random_situation(rng, m=1, n=10)
    return baseline_of(s, lead_time=300.0, baseline_id="b")


class TestAlertPolicy:
    def test_defaults(self):
        p = AlertPolicy()
        assert p.theta_on == 85.0 and p.theta_off == 70.0 and p.min_consecutive == 2

    def test_rejects_inverted_hysteresis(self):
        with pytest.raises(InvalidConfigError):
            AlertPolicy(theta_on=60.0, theta_off=60.0)

    def test_rejects_out_of_range(self):
        with pytest.raises(InvalidConfigError):
            AlertPolicy(theta_on=0.0)
        with pytest.raises(InvalidConfigError):
            AlertPolicy(theta_off=-1.0)
        with pytest.raises(InvalidConfigError):
            AlertPolicy(min_consecutive=0)


class TestStepAlert:
    def test_hand_simulated_raise_and_clear(self, baseline):
        policy = AlertPolicy(theta_on=78.0, theta_off=65.0, min_consecutive=1)
        emitted, _ = run_machine([50.0, 80.0, 75.0, 60.0], policy, baseline)
        assert len(emitted) == 2
        (i_raise, alert), (i_clear, cleared) = emitted
        assert i_raise == 1 and isinstance(alert, Alert)
        assert i_clear == 3 and isinstance(cleared, AlertCleared)
        assert cleared.alert.alert_id == alert.alert_id
        assert cleared.alert.cleared_at is not None

    def test_no_crossing_no_emission(self, baseline):
        policy = AlertPolicy(theta_on=78.0, theta_off=65.0, min_consecutive=1)
        emitted, state = run_machine([10.0, 50.0, 77.9], policy, baseline)
        assert emitted == []
        assert state.status is AlertStatus.IDLE

    def test_debounce_reset_between_hits(self, baseline):
        policy = AlertPolicy(theta_on=78.0, theta_off=65.0, min_consecutive=2)
        emitted, _ = run_machine([80.0, 60.0, 80.0, 80.0], policy, baseline)
        assert len(emitted) == 1
        i_raise, alert = emitted[0]
        assert i_raise == 3 and isinstance(alert, Alert)

    def test_hysteresis_band_does_not_clear(self, baseline):
        policy = AlertPolicy(theta_on=85.0, theta_off=70.0, min_consecutive=1)
        emitted, state = run_machine([90.0, 75.0, 71.0, 84.9], policy, baseline)
        assert len(emitted) == 1
        assert state.status is AlertStatus.FIRING

    def test_predicted_event_time_uses_lead(self, baseline):
        policy = AlertPolicy(theta_on=85.0, theta_off=70.0, min_consecutive=1)
        emitted, _ = run_machine([95.0], policy, baseline, t0=1200.0)
        alert = emitted[0][1]
        assert alert.predicted_event_time == pytest.approx(1200.0 + 300.0)
        assert alert.predicted_event_time >= alert.raised_at
        assert alert.rank_percent >= policy.theta_on

    def test_armed_status_before_firing(self, baseline):
        policy = AlertPolicy(theta_on=85.0, theta_off=70.0, min_consecutive=3)
        _, state = run_machine([90.0, 90.0], policy, baseline)
        assert state.status is AlertStatus.ARMED
        assert state.consecutive_hits == 2

    @given(
        ranks=st.lists(st.floats(0, 100, allow_nan=False), min_size=1, max_size=60),
        theta_on=st.floats(10, 100),
        gap=st.floats(1, 50),
        mc=st.integers(1, 4),
    )
    @settings(max_examples=200, deadline=None)
    def test_matches_reference_and_alternates(self, ranks, theta_on, gap, mc):
        theta_off = max(0.0, theta_on - gap)
        if theta_off >= theta_on:
            return
        policy = AlertPolicy(theta_on=theta_on, theta_off=theta_off, min_consecutive=mc)
        s, _ = random_situation(np.random.default_rng(7), m=1, n=10)
        b = baseline_of(s, lead_time=60.0)
        emitted, _ = run_machine(ranks, policy, b)
        expected = alert_reference(ranks, theta_on, theta_off, mc)
        got = [("raise" if isinstance(e, Alert) else "clear", i) for i, e in emitted]
        assert got == [(kind, i) for kind, i in expected]
        # alternation: (Alert AlertCleared)* (Alert)?
        kinds = [k for k, _ in got]
        assert kinds == ["raise", "clear"] * (len(kinds) // 2) + (
            ["raise"] if len(kinds) % 2 else []
        )


class TestKnnClassify:
    def _registry(self, rng, labels):
        out = []
        for i, label in enumerate(labels):
            s, _ = random_situation(rng, m=2, n=12)
            out.append(baseline_of(s, baseline_id=f"b{i}", label=label))
        return out

    def test_self_match(self, rng):
        registry = self._registry(rng, ["pain-precursor"])
        result = knn_classify(registry[0].situation, registry, k=1, cfg=SimilarityConfig())
        assert result.label == "pain-precursor"
        assert result.confidence == 1.0
        assert result.neighbors[0].percent == pytest.approx(100.0, abs=1e-9)

    def test_majority_vote(self, rng):
        registry = self._registry(rng, ["p", "p", "normal", "normal", "normal"])
        query = registry[0].situation
        # force the top-3 to be {p, p, normal} by querying near the two p baselines
        result = knn_classify(query, registry[:3], k=3, cfg=SimilarityConfig())
        assert result.label in {"p", "normal"}
        assert result.confidence >= 1 / 3

    def test_errors(self, rng):
        registry = self._registry(rng, ["a"])
        with pytest.raises(EmptyRegistryError):
            knn_classify(registry[0].situation, [], k=1, cfg=SimilarityConfig())
        with pytest.raises(KTooLargeError):
            knn_classify(registry[0].situation, registry, k=2, cfg=SimilarityConfig())

    def test_ranking_matches_exhaustive_sort(self, rng):
        registry = self._registry(rng, ["a", "b", "a", "b", "a", "b"])
        query, _ = random_situation(rng, m=2, n=12)
        cfg = SimilarityConfig()
        result = knn_classify(query, registry, k=3, cfg=cfg)
        scores = {
            b.baseline_id: situation_similarity(query, b, cfg).aggregate_percent
            for b in registry
        }
        expected = sorted(scores, key=lambda bid: (-scores[bid], bid))
        assert [nb.baseline_id for nb in result.neighbors] == expected

    def test_vote_tie_breaks_by_summed_percent(self, rng):
        registry = self._registry(rng, ["x", "y"])
        query = registry[1].situation  # exact match on the y baseline
        result = knn_classify(query, registry, k=2, cfg=SimilarityConfig())
        assert result.label == "y"
        assert result.confidence == 0.5


class TestResolveBaseline:
    def test_fixed_id(self, rng):
        registry = [baseline_of(random_situation(rng, 1, 8)[0], baseline_id="b1")]
        reports = {"b1": report_with_rank(50.0, "b1")}
        policy = AlertPolicy(baseline_id="b1")
        assert resolve_baseline(registry, policy, reports) == "b1"

    def test_fixed_id_missing(self, rng):
        registry = [baseline_of(random_situation(rng, 1, 8)[0], baseline_id="b1")]
        with pytest.raises(UnknownBaselineError):
            resolve_baseline(registry, AlertPolicy(baseline_id="nope"), {"b1": report_with_rank(50.0)})

    def test_best_match_argmax(self, rng):
        registry = [
            baseline_of(random_situation(rng, 1, 8)[0], baseline_id=bid) for bid in ("b1", "b2")
        ]
        reports = {"b1": report_with_rank(40.0, "b1"), "b2": report_with_rank(90.0, "b2")}
        assert resolve_baseline(registry, AlertPolicy(), reports) == "b2"

    def test_tie_breaks_lexicographically(self, rng):
        registry = [
            baseline_of(random_situation(rng, 1, 8)[0], baseline_id=bid) for bid in ("a", "b")
        ]
        reports = {"b": report_with_rank(70.0, "b"), "a": report_with_rank(70.0, "a")}
        assert resolve_baseline(registry, AlertPolicy(), reports) == "a"

    def test_argmax_invariant_under_monotone_transforms(self, rng):
        registry = [
            baseline_of(random_situation(rng, 1, 8)[0], baseline_id=bid)
            for bid in ("a", "b", "c")
        ]
        base = {"a": 35.0, "b": 82.0, "c": 11.0}
        for transform in (lambda x: x / 2.0, lambda x: x * x / 100.0):
            reports = {bid: report_with_rank(transform(v), bid) for bid, v in base.items()}
            assert resolve_baseline(registry, AlertPolicy(), reports) == "b"
