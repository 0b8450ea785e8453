"""Seeded synthetic bio-signal generator with injectable pre-event signatures.

There is no public dataset behind this project; the simulator is the ground
truth for every end-to-end test and for the shipped detection study.  Streams
are fully reproducible: each channel draws from its own counter-based
Philox4x64-10 substream, keyed by (stream seed, channel index), and Gaussian
noise uses the basic trigonometric Box-Muller transform (a block of cosines
followed by the matching block of sines), so another implementation can
regenerate the exact same values.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import InvalidScenarioError
from .situation import Sample

_M64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """The SplitMix64 mixer; used to derive independent stream seeds."""
    x = (x + 0x9E3779B97F4A7C15) & _M64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
    return (z ^ (z >> 31)) & _M64


def derive_seed(seed: int, salt: int) -> int:
    return splitmix64((seed & _M64) ^ splitmix64(salt & _M64))


@dataclass(frozen=True)
class ChannelModel:
    """One synthetic channel: a sine carrier plus Gaussian noise."""

    channel_id: str
    base: float
    amplitude: float
    period: float
    noise_sigma: float
    rate: float  # samples per second

    def __post_init__(self):
        if self.period <= 0:
            raise InvalidScenarioError(f"{self.channel_id}: period must be > 0")
        if self.rate <= 0:
            raise InvalidScenarioError(f"{self.channel_id}: rate must be > 0")
        if self.noise_sigma < 0:
            raise InvalidScenarioError(f"{self.channel_id}: noise_sigma must be >= 0")


@dataclass(frozen=True)
class EventSpec:
    """A significant event plus the signature that precedes it.

    Each named channel ramps linearly from 0 at (event_time - signature_lead)
    to its ramp_to offset at event_time, and contributes nothing outside that
    interval.
    """

    event_time: float
    signature_lead: float
    deltas: dict[str, float] = field(default_factory=dict)  # channel_id -> ramp_to

    def __post_init__(self):
        if self.signature_lead <= 0:
            raise InvalidScenarioError("signature_lead must be > 0")
        if self.event_time - self.signature_lead < 0:
            raise InvalidScenarioError("signature must start at or after t=0")

    def signature(self, t: np.ndarray, channel_id: str) -> np.ndarray:
        ramp_to = self.deltas.get(channel_id, 0.0)
        if ramp_to == 0.0:
            return np.zeros_like(t)
        start = self.event_time - self.signature_lead
        frac = (t - start) / self.signature_lead
        active = (t >= start) & (t <= self.event_time)
        return np.where(active, ramp_to * frac, 0.0)


@dataclass(frozen=True)
class Scenario:
    seed: int
    duration: float
    channels: tuple[ChannelModel, ...]
    events: tuple[EventSpec, ...] = ()

    def __post_init__(self):
        if self.duration <= 0:
            raise InvalidScenarioError("duration must be > 0")
        if not self.channels:
            raise InvalidScenarioError("scenario needs at least one channel")
        ids = [c.channel_id for c in self.channels]
        if len(set(ids)) != len(ids):
            raise InvalidScenarioError("channel ids must be unique")
        object.__setattr__(self, "channels", tuple(self.channels))
        object.__setattr__(self, "events", tuple(self.events))
        for ev in self.events:
            unknown = set(ev.deltas) - set(ids)
            if unknown:
                raise InvalidScenarioError(f"event deltas name unknown channels: {sorted(unknown)}")


class GenerationResult(NamedTuple):
    samples: list[Sample]
    events: tuple[EventSpec, ...]  # ground-truth markers


def _gaussian(key: int, count: int) -> np.ndarray:
    """count N(0,1) draws via Box-Muller (basic trig variant) on Philox uniforms."""
    if count == 0:
        return np.empty(0)
    pairs = (count + 1) // 2
    rng = np.random.Generator(np.random.Philox(key=key))
    u = rng.random(2 * pairs)
    u1 = 1.0 - u[:pairs]  # (0, 1]: keeps log() finite
    u2 = u[pairs:]
    r = np.sqrt(-2.0 * np.log(u1))
    theta = 2.0 * np.pi * u2
    return np.concatenate([r * np.cos(theta), r * np.sin(theta)])[:count]


def channel_values(scenario: Scenario, channel_index: int, stream_seed: int | None = None):
    """Timestamps and values for one channel; separated out for oracle tests."""
    ch = scenario.channels[channel_index]
    seed = scenario.seed if stream_seed is None else stream_seed
    count = int(math.floor(ch.rate * scenario.duration + 1e-9)) + 1
    t = np.arange(count, dtype=np.float64) / ch.rate
    values = ch.base + ch.amplitude * np.sin(2.0 * np.pi * t / ch.period)
    if ch.noise_sigma > 0:
        key = ((channel_index + 1) << 64) | (seed & _M64)
        values = values + ch.noise_sigma * _gaussian(key, count)
    for ev in scenario.events:
        values = values + ev.signature(t, ch.channel_id)
    return t, values


def generate(scenario: Scenario, stream_seed: int | None = None) -> GenerationResult:
    """Produce the scenario's full sample stream, merged in time order.

    Deterministic: the same scenario (and optional stream seed override)
    always yields bit-identical samples.
    """
    columns = []
    for idx, ch in enumerate(scenario.channels):
        t, values = channel_values(scenario, idx, stream_seed)
        columns.append((ch.channel_id, t, values))
    order: list[tuple[float, int, int]] = []  # (timestamp, channel order, row)
    for ci, (_, t, _) in enumerate(columns):
        order.extend((float(ts), ci, ri) for ri, ts in enumerate(t))
    order.sort()
    samples = [
        Sample(timestamp=ts, channel_id=columns[ci][0], value=float(columns[ci][2][ri]))
        for ts, ci, ri in order
    ]
    return GenerationResult(samples=samples, events=scenario.events)


class PairedTrial(NamedTuple):
    baseline: GenerationResult
    live: GenerationResult
    baseline_seed: int
    live_seed: int


def make_paired_trial(scenario: Scenario, trial_index: int) -> PairedTrial:
    """One baseline stream to snapshot from plus one live stream to monitor.

    The two streams draw independent noise (seeds derived from the scenario
    seed and the trial index via SplitMix64) but share the deterministic
    carrier and signature, so with zero noise they are identical.
    """
    if not scenario.events:
        raise InvalidScenarioError("paired trials need at least one event")
    baseline_seed = derive_seed(scenario.seed, 2 * trial_index)
    live_seed = derive_seed(scenario.seed, 2 * trial_index + 1)
    return PairedTrial(
        baseline=generate(scenario, stream_seed=baseline_seed),
        live=generate(scenario, stream_seed=live_seed),
        baseline_seed=baseline_seed,
        live_seed=live_seed,
    )


# ---------------------------------------------------------------------------
# Scenario files and the shipped default.

def scenario_to_dict(s: Scenario) -> dict:
    return {
        "seed": s.seed,
        "duration": s.duration,
        "channels": [
            {
                "channel_id": c.channel_id,
                "base": c.base,
                "amplitude": c.amplitude,
                "period": c.period,
                "noise_sigma": c.noise_sigma,
                "rate": c.rate,
            }
            for c in s.channels
        ],
        "events": [
            {
                "event_time": e.event_time,
                "signature_lead": e.signature_lead,
                "deltas": {c: {"ramp_to": v} for c, v in e.deltas.items()},
            }
            for e in s.events
        ],
    }


def scenario_from_dict(doc: dict) -> Scenario:
    try:
        return Scenario(
            seed=int(doc["seed"]),
            duration=float(doc["duration"]),
            channels=tuple(
                ChannelModel(
                    channel_id=str(c["channel_id"]),
                    base=float(c["base"]),
                    amplitude=float(c["amplitude"]),
                    period=float(c["period"]),
                    noise_sigma=float(c["noise_sigma"]),
                    rate=float(c["rate"]),
                )
                for c in doc["channels"]
            ),
            events=tuple(
                EventSpec(
                    event_time=float(e["event_time"]),
                    signature_lead=float(e["signature_lead"]),
                    deltas={str(c): float(d["ramp_to"]) for c, d in e.get("deltas", {}).items()},
                )
                for e in doc.get("events", ())
            ),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidScenarioError(f"bad scenario document: {exc}") from exc


def load_scenario(path: str | Path) -> Scenario:
    return scenario_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def save_scenario(s: Scenario, path: str | Path) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(s), indent=2) + "\n", encoding="utf-8")


def default_scenario() -> Scenario:
    """The shipped pain-precursor fixture.

    Channel parameters and the hr/eda ramp are invented test values, not
    clinical claims: heart rate and skin conductance drift upward over the
    five minutes before the event while respiration stays uninvolved.
    """
    return Scenario(
        seed=20240911,
        duration=2400.0,
        channels=(
            ChannelModel("hr", base=72.0, amplitude=2.0, period=60.0, noise_sigma=0.8, rate=1.0),
            ChannelModel("eda", base=2.0, amplitude=0.1, period=120.0, noise_sigma=0.05, rate=4.0),
            ChannelModel("resp", base=16.0, amplitude=1.0, period=30.0, noise_sigma=0.3, rate=1.0),
        ),
        events=(
            EventSpec(
                event_time=1800.0,
                signature_lead=300.0,
                deltas={"hr": 10.0, "eda": 1.5},
            ),
        ),
    )
