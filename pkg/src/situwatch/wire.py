"""JSON mappings between domain values and the HTTP/stream surface.

Field names mirror the domain types one for one so clients never translate.
"""

from __future__ import annotations

from typing import Any

from .prediction import Alert, AlertPolicy
from .similarity import ChannelMode, SimilarityConfig, SimilarityMethod, SimilarityReport
from .situation import ChannelSpec, SituationWindow


def channel_spec_to_dict(spec: ChannelSpec) -> dict:
    return {
        "channel_id": spec.channel_id,
        "kind": spec.kind,
        "unit": spec.unit,
        "weight": spec.weight,
    }


def channel_spec_from_dict(doc: dict) -> ChannelSpec:
    return ChannelSpec(
        channel_id=str(doc["channel_id"]),
        kind=str(doc.get("kind", "")),
        unit=str(doc.get("unit", "")),
        weight=float(doc.get("weight", 1.0)),
    )


def window_to_dict(w: SituationWindow) -> dict:
    return {"t_start": w.t_start, "t_end": w.t_end, "n_samples": w.n_samples}


def report_to_dict(r: SimilarityReport) -> dict:
    return {
        "baseline_id": r.baseline_id,
        "window": window_to_dict(r.window),
        "per_channel": {
            c: {"distance": s.distance, "similarity_percent": s.similarity_percent}
            for c, s in r.per_channel.items()
        },
        "aggregate_percent": r.aggregate_percent,
        "method": r.method.value,
        "computed_at": r.computed_at,
        "skipped_channels": list(r.skipped_channels),
    }


def alert_to_dict(a: Alert) -> dict:
    return {
        "alert_id": a.alert_id,
        "raised_at": a.raised_at,
        "baseline_id": a.baseline_id,
        "rank_percent": a.rank_percent,
        "predicted_event_time": a.predicted_event_time,
        "cleared_at": a.cleared_at,
    }


def policy_to_dict(p: AlertPolicy) -> dict:
    return {
        "theta_on": p.theta_on,
        "theta_off": p.theta_off,
        "min_consecutive": p.min_consecutive,
        "baseline_id": p.baseline_id,
    }


def policy_from_dict(doc: dict) -> AlertPolicy:
    base = AlertPolicy()
    return AlertPolicy(
        theta_on=float(doc.get("theta_on", base.theta_on)),
        theta_off=float(doc.get("theta_off", base.theta_off)),
        min_consecutive=int(doc.get("min_consecutive", base.min_consecutive)),
        baseline_id=str(doc.get("baseline_id", base.baseline_id)),
    )


def similarity_to_dict(cfg: SimilarityConfig) -> dict:
    return {
        "method": cfg.method.value,
        "znormalize": cfg.znormalize,
        "dtw_band": cfg.dtw_band,
        "tau": cfg.tau,
        "channel_weights": dict(cfg.channel_weights),
        "channel_mode": cfg.channel_mode.value,
    }


def similarity_from_dict(doc: dict) -> SimilarityConfig:
    base = SimilarityConfig()
    band: Any = doc.get("dtw_band", base.dtw_band)
    if isinstance(band, str) and band != "full":
        band = band  # let SimilarityConfig reject it with a named error
    elif not isinstance(band, str):
        band = int(band)
    return SimilarityConfig(
        method=SimilarityMethod(doc.get("method", base.method.value)),
        znormalize=bool(doc.get("znormalize", base.znormalize)),
        dtw_band=band,
        tau=float(doc.get("tau", base.tau)),
        channel_weights={str(k): float(v) for k, v in doc.get("channel_weights", {}).items()},
        channel_mode=ChannelMode(doc.get("channel_mode", base.channel_mode.value)),
    )
