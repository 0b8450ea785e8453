"""Wire-format parsing, the retention ring buffer, sliding-window emission,
and the on-disk baseline store.

The wire format is one sample per line, ``timestamp,channel_id,value`` with
``#`` comments, chosen so any sensor gateway can produce it and tests can
assert bit-exact round trips.
"""

from __future__ import annotations

import bisect
import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import (
    BadTimestampError,
    EmptyWindowError,
    IoFailureError,
    MalformedLineError,
    NonFiniteValueError,
    SchemaViolationError,
    SituwatchError,
)
from .situation import (
    Baseline,
    ChannelSpec,
    GapPolicy,
    Provenance,
    Sample,
    Situation,
    SituationWindow,
    resample_channel,
    validate_situation,
)

logger = logging.getLogger(__name__)

DEFAULT_RETENTION = 7200.0  # seconds of history kept per channel
DEFAULT_STRIDE = 60.0  # seconds between emitted window ends

_COMPACT_THRESHOLD = 4096  # evicted slots tolerated before the list is rebuilt


def parse_record(line: str) -> Sample | None:
    """Parse one wire line into a Sample; comments and blank lines yield None.

    Raises MalformedLineError for a wrong field count or unparseable numbers,
    BadTimestampError for a timestamp that parses but is not finite and
    non-negative, and NonFiniteValueError for a NaN/Inf value.  Each error
    carries the offending line for logs.
    """
    stripped = line.strip()
    if not stripped or stripped.startswith("#"):
        return None
    parts = stripped.split(",")
    if len(parts) != 3:
        raise MalformedLineError(f"expected 3 comma-separated fields, got {len(parts)}", line)
    ts_text, channel_id, value_text = (p.strip() for p in parts)
    if not channel_id:
        raise MalformedLineError("empty channel_id", line)
    try:
        timestamp = float(ts_text)
    except ValueError:
        raise MalformedLineError(f"timestamp {ts_text!r} is not a number", line) from None
    try:
        value = float(value_text)
    except ValueError:
        raise MalformedLineError(f"value {value_text!r} is not a number", line) from None
    if not math.isfinite(timestamp) or timestamp < 0:
        raise BadTimestampError(f"timestamp {timestamp!r} not finite and non-negative", line)
    if not math.isfinite(value):
        raise NonFiniteValueError(f"non-finite value in line {line!r}")
    return Sample(timestamp=timestamp, channel_id=channel_id, value=value)


def format_record(sample: Sample) -> str:
    """Inverse of parse_record; float fields use shortest round-trip repr."""
    return f"{sample.timestamp!r},{sample.channel_id},{sample.value!r}"


@dataclass(frozen=True)
class PushResult:
    accepted: bool
    evicted: int


class _ChannelBuffer:
    """Sorted (timestamp, value) columns with lazy front eviction."""

    __slots__ = ("ts", "vals", "start", "watermark", "first_seen")

    def __init__(self):
        self.ts: list[float] = []
        self.vals: list[float] = []
        self.start = 0  # index of the first live element
        self.watermark = -math.inf
        self.first_seen = math.inf

    def __len__(self) -> int:
        return len(self.ts) - self.start

    def push(self, timestamp: float, value: float, retention: float) -> PushResult:
        if timestamp < self.watermark - retention:
            return PushResult(accepted=False, evicted=0)
        if not self.ts or timestamp >= self.ts[-1]:
            self.ts.append(timestamp)
            self.vals.append(value)
        else:
            i = bisect.bisect_right(self.ts, timestamp, lo=self.start)
            self.ts.insert(i, timestamp)
            self.vals.insert(i, value)
        self.watermark = max(self.watermark, timestamp)
        self.first_seen = min(self.first_seen, timestamp)

        horizon = self.watermark - retention
        evicted = 0
        while self.start < len(self.ts) and self.ts[self.start] < horizon:
            self.start += 1
            evicted += 1
        if self.start >= _COMPACT_THRESHOLD and self.start * 2 >= len(self.ts):
            self.ts = self.ts[self.start:]
            self.vals = self.vals[self.start:]
            self.start = 0
        return PushResult(accepted=True, evicted=evicted)

    def slice_arrays(self, t0: float, t1: float) -> tuple[np.ndarray, np.ndarray]:
        lo = bisect.bisect_left(self.ts, t0, lo=self.start)
        hi = bisect.bisect_right(self.ts, t1, lo=self.start)
        return (
            np.asarray(self.ts[lo:hi], dtype=np.float64),
            np.asarray(self.vals[lo:hi], dtype=np.float64),
        )

    def span(self) -> tuple[float, float] | None:
        if self.start >= len(self.ts):
            return None
        return self.ts[self.start], self.ts[-1]


class StreamCursor:
    """Per-channel ring buffers plus the sliding-window emission bookkeeping.

    Single-writer: one logical owner pushes samples and drains windows; readers
    only ever see immutable Situation values built from the buffers.
    """

    def __init__(self, retention: float = DEFAULT_RETENTION, stride: float = DEFAULT_STRIDE):
        if retention <= 0:
            raise ValueError(f"retention must be > 0, got {retention}")
        if stride <= 0:
            raise ValueError(f"stride must be > 0, got {stride}")
        self.retention = retention
        self.stride = stride
        self._buffers: dict[str, _ChannelBuffer] = {}
        self._emit_anchor: float | None = None
        self._emit_index = 0

    def push_sample(self, sample: Sample) -> PushResult:
        """Insert in timestamp order; reject samples older than the retention
        horizon; evict expired ones."""
        buf = self._buffers.get(sample.channel_id)
        if buf is None:
            buf = self._buffers[sample.channel_id] = _ChannelBuffer()
        return buf.push(sample.timestamp, sample.value, self.retention)

    def watermarks(self) -> dict[str, float]:
        return {c: b.watermark for c, b in self._buffers.items() if b.watermark > -math.inf}

    def watermark(self, channels: Iterable[str] | None = None) -> float:
        """The stream position every requested channel has reached (the min of
        per-channel watermarks); -inf while any requested channel is silent."""
        ids = list(channels) if channels is not None else list(self._buffers)
        if not ids:
            return -math.inf
        return min(self._buffers[c].watermark if c in self._buffers else -math.inf for c in ids)

    def first_seen(self) -> float:
        """Earliest timestamp ever accepted on any channel (survives eviction)."""
        if not self._buffers:
            return math.inf
        return min(b.first_seen for b in self._buffers.values())

    def channel_spans(self) -> dict[str, tuple[float, float]]:
        return {c: sp for c, b in self._buffers.items() if (sp := b.span()) is not None}

    def samples_between(self, t0: float, t1: float) -> list[Sample]:
        """All retained samples with t0 <= timestamp <= t1, time-ordered."""
        out: list[Sample] = []
        for cid, buf in self._buffers.items():
            ts, vs = buf.slice_arrays(t0, t1)
            out.extend(
                Sample(timestamp=float(t), channel_id=cid, value=float(v))
                for t, v in zip(ts, vs)
            )
        out.sort(key=lambda s: (s.timestamp, s.channel_id))
        return out


def emit_windows(
    cursor: StreamCursor,
    now: float,
    duration: float,
    n: int,
    specs: Sequence[ChannelSpec],
    *,
    gap_policy: GapPolicy = GapPolicy.STRICT,
    provenance: Provenance = Provenance.LIVE,
    on_error: Callable[[float, Exception], None] | None = None,
) -> list[Situation]:
    """Drain every due window [t_end - duration, t_end] off the cursor.

    Window ends sit on a fixed grid: the anchor is the first multiple of the
    stride at or after (first sample + duration), and consecutive ends differ
    by exactly one stride with no gaps and no repeats.  A window is due once
    every requested channel's watermark (capped by ``now``) has reached its end.
    A window whose build fails is logged, reported to ``on_error``, and
    skipped; the stream continues.
    """
    if duration <= 0:
        raise ValueError(f"duration must be > 0, got {duration}")
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    ids = [spec.channel_id for spec in specs]
    ready = min(cursor.watermark(ids), now)
    if not math.isfinite(ready):
        return []
    if cursor._emit_anchor is None:
        first = cursor.first_seen()
        if not math.isfinite(first):
            return []
        cursor._emit_anchor = math.ceil((first + duration) / cursor.stride - 1e-9) * cursor.stride
        cursor._emit_index = 0

    grid_template = None
    out: list[Situation] = []
    while True:
        t_end = cursor._emit_anchor + cursor._emit_index * cursor.stride
        if t_end > ready:
            break
        cursor._emit_index += 1
        window = SituationWindow(t_start=t_end - duration, t_end=t_end, n_samples=n)
        try:
            out.append(
                _build_from_cursor(cursor, window, specs, gap_policy, provenance)
            )
        except SituwatchError as exc:
            logger.warning("skipping window ending at %.3f: %s", t_end, exc)
            if on_error is not None:
                on_error(t_end, exc)
    return out


def _build_from_cursor(
    cursor: StreamCursor,
    window: SituationWindow,
    specs: Sequence[ChannelSpec],
    gap_policy: GapPolicy,
    provenance: Provenance,
) -> Situation:
    # Mirrors build_situation but slices the cursor's columns directly so the
    # hot path never materializes Sample objects.
    grid = window.grid()
    channels: dict[str, np.ndarray] = {}
    coverage: dict[str, float] = {}
    empty: list[str] = []
    for spec in specs:
        buf = cursor._buffers.get(spec.channel_id)
        ts, vs = (
            buf.slice_arrays(window.t_start, window.t_end)
            if buf is not None
            else (np.empty(0), np.empty(0))
        )
        if len(ts) == 0:
            empty.append(spec.channel_id)
            channels[spec.channel_id] = np.zeros(window.n_samples)
            coverage[spec.channel_id] = 0.0
            continue
        channels[spec.channel_id], coverage[spec.channel_id] = resample_channel(grid, ts, vs)
    if empty and gap_policy is GapPolicy.STRICT:
        raise EmptyWindowError(tuple(empty), all_empty=len(empty) == len(specs))
    return Situation(
        window=window, grid=grid, channels=channels, provenance=provenance, coverage=coverage
    )


# ---------------------------------------------------------------------------
# Baseline store: one self-contained JSON document per baseline.

_REQUIRED_FIELDS = (
    "baseline_id",
    "label",
    "event_time",
    "lead_time",
    "created_at",
    "window",
    "channels",
    "coverage",
)
_WINDOW_FIELDS = ("t_start", "t_end", "n_samples")


def baseline_to_dict(b: Baseline) -> dict:
    return {
        "baseline_id": b.baseline_id,
        "label": b.label,
        "event_time": b.event_time,
        "lead_time": b.lead_time,
        "created_at": b.created_at,
        "window": {
            "t_start": b.situation.window.t_start,
            "t_end": b.situation.window.t_end,
            "n_samples": b.situation.window.n_samples,
        },
        "channels": {c: [float(v) for v in vec] for c, vec in b.situation.channels.items()},
        "coverage": {c: float(f) for c, f in b.situation.coverage.items()},
        "provenance": b.situation.provenance.value,
    }


def baseline_from_dict(doc: dict) -> Baseline:
    """Reconstruct and fully validate a baseline document."""
    if not isinstance(doc, dict):
        raise SchemaViolationError("document", "not a JSON object")
    for name in _REQUIRED_FIELDS:
        if name not in doc:
            raise SchemaViolationError(name)
    for name in _WINDOW_FIELDS:
        if name not in doc["window"]:
            raise SchemaViolationError(f"window.{name}")
    try:
        window = SituationWindow(
            t_start=float(doc["window"]["t_start"]),
            t_end=float(doc["window"]["t_end"]),
            n_samples=int(doc["window"]["n_samples"]),
        )
        channels = {
            str(c): np.asarray(vec, dtype=np.float64) for c, vec in doc["channels"].items()
        }
        coverage = {str(c): float(f) for c, f in doc["coverage"].items()}
        situation = Situation(
            window=window,
            grid=window.grid(),
            channels=channels,
            provenance=Provenance(doc.get("provenance", Provenance.LIVE.value)),
            coverage=coverage,
        )
    except (TypeError, ValueError) as exc:
        raise SchemaViolationError("document", str(exc)) from exc
    violations = validate_situation(situation)
    if violations:
        first = violations[0]
        raise SchemaViolationError(first.channel_id or first.code, first.message)
    if set(coverage) != set(channels):
        raise SchemaViolationError("coverage", "coverage keys must match channel keys")
    try:
        return Baseline(
            baseline_id=str(doc["baseline_id"]),
            situation=situation,
            event_time=float(doc["event_time"]),
            lead_time=float(doc["lead_time"]),
            label=str(doc["label"]),
            created_at=float(doc["created_at"]),
        )
    except (TypeError, ValueError) as exc:
        raise SchemaViolationError("baseline", str(exc)) from exc


def save_baseline(b: Baseline, directory: str | Path) -> Path:
    """Write ``<baseline_id>.json`` under ``directory``; floats round-trip
    losslessly via shortest-repr JSON encoding."""
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
        path = directory / f"{b.baseline_id}.json"
        if path.parent != directory:  # id tried to escape the store
            raise IoFailureError(f"baseline id {b.baseline_id!r} is not a valid file stem")
        path.write_text(json.dumps(baseline_to_dict(b), indent=2) + "\n", encoding="utf-8")
        return path
    except OSError as exc:
        raise IoFailureError(f"cannot save baseline {b.baseline_id!r}: {exc}") from exc


def load_baselines(directory: str | Path) -> list[Baseline]:
    """Load every ``*.json`` baseline under ``directory``, sorted by filename.

    Corrupt or schema-violating files are logged with their reason and
    skipped; they never abort the load.
    """
    directory = Path(directory)
    if not directory.exists():
        return []
    out: list[Baseline] = []
    for path in sorted(directory.glob("*.json")):
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
            out.append(baseline_from_dict(doc))
        except (OSError, json.JSONDecodeError, SituwatchError) as exc:
            logger.warning("skipping baseline file %s: %s", path.name, exc)
    return out
