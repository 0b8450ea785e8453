"""Service configuration: JSON file plus environment overrides.

Env vars: SITUWATCH_PORT (HTTP port), SITUWATCH_CONFIG (config file path,
read by the CLI), SITUWATCH_DATA_DIR (baseline store directory).
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import InvalidConfigError
from .prediction import AlertPolicy
from .similarity import SimilarityConfig
from .situation import ChannelSpec, GapPolicy
from .wire import channel_spec_from_dict, policy_from_dict, similarity_from_dict

ENV_PORT = "SITUWATCH_PORT"
ENV_CONFIG = "SITUWATCH_CONFIG"
ENV_DATA_DIR = "SITUWATCH_DATA_DIR"

DEFAULT_CHANNELS = (
    ChannelSpec(channel_id="hr", kind="heart-rate", unit="bpm"),
    ChannelSpec(channel_id="eda", kind="electrodermal-activity", unit="uS"),
    ChannelSpec(channel_id="resp", kind="respiration-rate", unit="breaths/min"),
)


@dataclass(frozen=True)
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8787
    tcp_port: int | None = None  # raw line-protocol ingest, off unless set
    data_dir: str = "situwatch-data"
    static_dir: str | None = None  # dashboard bundle, served at / when present
    channels: tuple[ChannelSpec, ...] = DEFAULT_CHANNELS
    duration: float = 900.0
    n_samples: int = 90
    stride: float = 60.0
    retention: float = 7200.0
    gap_policy: GapPolicy = GapPolicy.STRICT
    default_lead_time: float = 300.0
    policy: AlertPolicy = field(default_factory=AlertPolicy)
    similarity: SimilarityConfig = field(default_factory=SimilarityConfig)

    def __post_init__(self):
        if self.duration <= 0:
            raise InvalidConfigError("duration", "must be > 0")
        if self.n_samples < 2:
            raise InvalidConfigError("n_samples", "must be >= 2")
        if self.stride <= 0:
            raise InvalidConfigError("stride", "must be > 0")
        if self.retention < self.duration:
            raise InvalidConfigError("retention", "must be at least the window duration")
        if not self.channels:
            raise InvalidConfigError("channels", "at least one channel is required")


def config_from_dict(doc: dict) -> ServiceConfig:
    base = ServiceConfig()
    window = doc.get("window", {})
    try:
        return ServiceConfig(
            host=str(doc.get("host", base.host)),
            port=int(doc.get("port", base.port)),
            tcp_port=int(doc["tcp_port"]) if doc.get("tcp_port") is not None else None,
            data_dir=str(doc.get("data_dir", base.data_dir)),
            static_dir=str(doc["static_dir"]) if doc.get("static_dir") else None,
            channels=tuple(channel_spec_from_dict(c) for c in doc.get("channels", []))
            or base.channels,
            duration=float(window.get("duration", base.duration)),
            n_samples=int(window.get("n_samples", base.n_samples)),
            stride=float(doc.get("stride", base.stride)),
            retention=float(doc.get("retention", base.retention)),
            gap_policy=GapPolicy(doc.get("gap_policy", base.gap_policy.value)),
            default_lead_time=float(doc.get("default_lead_time", base.default_lead_time)),
            policy=policy_from_dict(doc.get("policy", {})),
            similarity=similarity_from_dict(doc.get("similarity", {})),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidConfigError("config", f"bad config document: {exc}") from exc


def load_config(path: str | Path | None = None) -> ServiceConfig:
    """Read the config file (if any) and apply environment overrides."""
    if path is None:
        path = os.environ.get(ENV_CONFIG)
    if path is not None and Path(path).exists():
        config = config_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
    else:
        config = ServiceConfig()
    if os.environ.get(ENV_PORT):
        config = replace(config, port=int(os.environ[ENV_PORT]))
    if os.environ.get(ENV_DATA_DIR):
        config = replace(config, data_dir=os.environ[ENV_DATA_DIR])
    return config
