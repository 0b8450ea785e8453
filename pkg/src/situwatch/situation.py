"""Situation data model: fixed-grid multichannel windows built from raw samples.

A situation is an m-channel by n-sample matrix over a time window.  All
channels, whatever their native sampling rates, are resampled onto one
shared uniform grid by linear interpolation; grid points outside the span
of a channel's raw data are clamped to the nearest raw value and tracked
via a per-channel coverage fraction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    ChannelMismatchError,
    EmptyWindowError,
    InsufficientHistoryError,
    NonFiniteValueError,
)

WINDOW_TOLERANCE = 1e-6  # seconds, for baseline window arithmetic
GRID_RTOL = 1e-9  # relative tolerance on grid uniformity

DEFAULT_WINDOW_DURATION = 900.0  # seconds
DEFAULT_N_SAMPLES = 90  # one point per 10 s at the default duration
DEFAULT_LEAD_TIME = 300.0  # seconds between baseline window end and event


class GapPolicy(str, Enum):
    """What to do with a registered channel that has no samples in the window."""

    STRICT = "strict"  # raise EmptyWindowError
    ZERO_FILL = "zero_fill"  # emit zeros with coverage 0


class Provenance(str, Enum):
    LIVE = "live"
    REPLAY = "replay"
    SYNTHETIC = "synthetic"


@dataclass(frozen=True)
class Sample:
    """One timestamped reading of one channel.

    Timestamps are seconds since epoch, UTC.  Values are in the channel's
    native unit.  Non-finite or negative-time readings are rejected here so
    everything downstream can assume clean inputs.
    """

    timestamp: float
    channel_id: str
    value: float

    def __post_init__(self):
        if not math.isfinite(self.timestamp) or self.timestamp < 0:
            raise NonFiniteValueError(
                f"timestamp must be finite and non-negative, got {self.timestamp!r}"
            )
        if not math.isfinite(self.value):
            raise NonFiniteValueError(
                f"value must be finite, got {self.value!r} on {self.channel_id!r}"
            )


@dataclass(frozen=True)
class ChannelSpec:
    """Registration record for one channel.

    Channels are configuration, never code: adding a sensor means adding a
    spec, not a software component.
    """

    channel_id: str
    kind: str = ""
    unit: str = ""
    weight: float = 1.0

    def __post_init__(self):
        if not self.channel_id:
            raise ValueError("channel_id must be non-empty")
        if not math.isfinite(self.weight) or self.weight < 0:
            raise ValueError(f"weight must be finite and >= 0, got {self.weight!r}")


@dataclass(frozen=True)
class SituationWindow:
    """Half-open in neither sense: the window spans [t_start, t_end] inclusive."""

    t_start: float
    t_end: float
    n_samples: int

    def __post_init__(self):
        if not (math.isfinite(self.t_start) and math.isfinite(self.t_end)):
            raise ValueError("window bounds must be finite")
        if self.t_end <= self.t_start:
            raise ValueError(f"t_end must exceed t_start, got [{self.t_start}, {self.t_end}]")
        if self.n_samples < 2:
            raise ValueError(f"n_samples must be >= 2, got {self.n_samples}")

    @property
    def interval(self) -> float:
        """Spacing between consecutive grid points."""
        return (self.t_end - self.t_start) / (self.n_samples - 1)

    @property
    def duration(self) -> float:
        return self.t_end - self.t_start

    def grid(self) -> np.ndarray:
        """The uniform timestamp grid; endpoints are exact."""
        return np.linspace(self.t_start, self.t_end, self.n_samples)


@dataclass(eq=False)
class Situation:
    """An m-channel x n-sample matrix over one time window.

    ``channels`` preserves insertion order (the registry order).  ``coverage``
    maps each channel to the fraction of grid points backed by interpolation
    between real samples rather than edge clamping.
    """

    window: SituationWindow
    grid: np.ndarray
    channels: dict[str, np.ndarray]
    provenance: Provenance = Provenance.LIVE
    coverage: dict[str, float] = field(default_factory=dict)

    @property
    def channel_ids(self) -> tuple[str, ...]:
        return tuple(self.channels.keys())

    @property
    def n_channels(self) -> int:
        return len(self.channels)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Situation):
            return NotImplemented
        return (
            self.window == other.window
            and self.provenance == other.provenance
            and np.array_equal(self.grid, other.grid)
            and self.channel_ids == other.channel_ids
            and all(np.array_equal(self.channels[c], other.channels[c]) for c in self.channels)
            and self.coverage == other.coverage
        )


@dataclass(frozen=True)
class Violation:
    """One failed situation invariant, naming the invariant and the channel."""

    code: str
    channel_id: str | None = None
    index: int | None = None
    message: str = ""


@dataclass(eq=False)
class Baseline:
    """A labeled situation recorded before a confirmed event.

    ``lead_time`` is the gap between the window end and the event; it doubles
    as the advance-notice horizon when an alert fires against this baseline.
    """

    baseline_id: str
    situation: Situation
    event_time: float
    lead_time: float
    label: str
    created_at: float

    def __post_init__(self):
        if self.lead_time < 0:
            raise ValueError(f"lead_time must be >= 0, got {self.lead_time}")
        drift = self.situation.window.t_end + self.lead_time - self.event_time
        if abs(drift) > WINDOW_TOLERANCE:
            raise ValueError(
                f"window end + lead_time must equal event_time (off by {drift:.3g} s)"
            )
        if self.event_time <= self.situation.window.t_start:
            raise ValueError("event_time must fall after the window start")

    def __eq__(self, other) -> bool:
        if not isinstance(other, Baseline):
            return NotImplemented
        return (
            self.baseline_id == other.baseline_id
            and self.label == other.label
            and self.event_time == other.event_time
            and self.lead_time == other.lead_time
            and self.created_at == other.created_at
            and self.situation == other.situation
        )


def _dedupe_sorted(ts: np.ndarray, vs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Collapse duplicate timestamps, keeping the last value of each run."""
    if len(ts) > 1:
        keep = np.append(ts[1:] != ts[:-1], True)
        if not keep.all():
            return ts[keep], vs[keep]
    return ts, vs


def resample_channel(
    grid: np.ndarray, ts: np.ndarray, vs: np.ndarray
) -> tuple[np.ndarray, float]:
    """Evaluate the piecewise-linear interpolant of (ts, vs) at each grid point.

    ``ts`` must be sorted ascending; duplicate timestamps keep the last value.
    Grid points outside [ts[0], ts[-1]] are clamped to the nearest raw value.
    Returns the resampled values and the covered (non-clamped) fraction.
    """
    ts, vs = _dedupe_sorted(ts, vs)
    values = np.interp(grid, ts, vs)
    covered = (grid >= ts[0]) & (grid <= ts[-1])
    return values, float(np.count_nonzero(covered)) / len(grid)


def build_situation(
    samples: Iterable[Sample],
    specs: Sequence[ChannelSpec],
    window: SituationWindow,
    gap_policy: GapPolicy = GapPolicy.STRICT,
    provenance: Provenance = Provenance.LIVE,
) -> Situation:
    """Resample raw samples onto the window's uniform grid, one row per spec.

    Interpolation is linear between the two raw samples bracketing each grid
    point; beyond the first/last raw sample the value is held (clamped) and
    the grid point counts as uncovered.  A channel counts as empty when its
    raw data span does not touch the window at all; empty channels are an
    error under GapPolicy.STRICT and a zero row with coverage 0 under
    GapPolicy.ZERO_FILL.  Samples for unregistered channels are an error
    under STRICT and ignored under ZERO_FILL.
    """
    if not specs:
        raise ValueError("at least one ChannelSpec is required")
    known = {spec.channel_id for spec in specs}
    by_channel: dict[str, tuple[list[float], list[float]]] = {c: ([], []) for c in known}
    for s in samples:
        bucket = by_channel.get(s.channel_id)
        if bucket is None:
            if gap_policy is GapPolicy.STRICT:
                raise ChannelMismatchError(
                    f"sample references unregistered channel {s.channel_id!r}"
                )
            continue
        bucket[0].append(s.timestamp)
        bucket[1].append(s.value)

    grid = window.grid()
    channels: dict[str, np.ndarray] = {}
    coverage: dict[str, float] = {}
    empty: list[str] = []
    for spec in specs:
        ts_list, vs_list = by_channel[spec.channel_id]
        ts = np.asarray(ts_list, dtype=np.float64)
        vs = np.asarray(vs_list, dtype=np.float64)
        if len(ts) > 1 and np.any(ts[1:] < ts[:-1]):
            order = np.argsort(ts, kind="stable")
            ts, vs = ts[order], vs[order]
        in_window = len(ts) > 0 and ts[-1] >= window.t_start and ts[0] <= window.t_end
        if not in_window:
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


def validate_situation(s: Situation) -> list[Violation]:
    """Check every situation invariant; total function, never raises.

    Returns an empty list iff the situation is well-formed.
    """
    out: list[Violation] = []
    n = s.window.n_samples
    if s.n_channels < 1:
        out.append(Violation("no_channels", message="situation must carry at least one channel"))
    if len(s.grid) != n:
        out.append(
            Violation("grid_length", message=f"grid has {len(s.grid)} points, window says {n}")
        )
    else:
        if s.grid[0] != s.window.t_start:
            out.append(Violation("grid_start", message="grid[0] != window.t_start"))
        if s.grid[-1] != s.window.t_end:
            out.append(Violation("grid_end", message="grid[-1] != window.t_end"))
        deltas = np.diff(s.grid)
        interval = s.window.interval
        # The relative bound alone is unattainable in float64 once |t| is
        # large (delta rounding is ~1 ulp of t_end), so allow whichever of
        # the two bounds is looser.
        tol = max(GRID_RTOL * interval, 2.0 * np.spacing(max(abs(s.window.t_start), abs(s.window.t_end))))
        if np.any(np.abs(deltas - interval) > tol):
            out.append(Violation("grid_nonuniform", message="grid spacing is not uniform"))
    for cid, vec in s.channels.items():
        if len(vec) != n:
            out.append(
                Violation(
                    "length_mismatch",
                    channel_id=cid,
                    message=f"channel {cid!r} has {len(vec)} samples, expected {n}",
                )
            )
            continue
        bad = np.flatnonzero(~np.isfinite(vec))
        if bad.size:
            out.append(
                Violation(
                    "non_finite",
                    channel_id=cid,
                    index=int(bad[0]),
                    message=f"channel {cid!r} has a non-finite value at index {int(bad[0])}",
                )
            )
    for cid, frac in s.coverage.items():
        if not (0.0 <= frac <= 1.0):
            out.append(
                Violation(
                    "coverage_range",
                    channel_id=cid,
                    message=f"coverage {frac!r} outside [0, 1]",
                )
            )
    return out


def _channel_spans(
    history: Iterable[Sample], channel_ids: set[str]
) -> dict[str, tuple[float, float]]:
    spans: dict[str, tuple[float, float]] = {}
    for s in history:
        if s.channel_id not in channel_ids:
            continue
        lo, hi = spans.get(s.channel_id, (math.inf, -math.inf))
        spans[s.channel_id] = (min(lo, s.timestamp), max(hi, s.timestamp))
    return spans


def snapshot_baseline(
    history,
    specs: Sequence[ChannelSpec],
    event_time: float,
    lead_time: float,
    duration: float = DEFAULT_WINDOW_DURATION,
    n: int = DEFAULT_N_SAMPLES,
    label: str = "",
    *,
    baseline_id: str | None = None,
    created_at: float | None = None,
    gap_policy: GapPolicy = GapPolicy.STRICT,
    provenance: Provenance = Provenance.LIVE,
) -> Baseline:
    """Freeze the window that preceded a reported event into a Baseline.

    The window is [event_time - lead_time - duration, event_time - lead_time].
    ``history`` is either a flat iterable of Samples or anything exposing
    ``samples_between(t0, t1)`` and ``channel_spans()`` (a stream cursor).
    Raises InsufficientHistoryError when the buffer does not span the window,
    with one grid interval of slack at each edge.
    """
    if duration <= 0:
        raise ValueError(f"duration must be > 0, got {duration}")
    if lead_time < 0:
        raise ValueError(f"lead_time must be >= 0, got {lead_time}")
    window = SituationWindow(
        t_start=event_time - lead_time - duration,
        t_end=event_time - lead_time,
        n_samples=n,
    )
    wanted = {spec.channel_id for spec in specs}
    if hasattr(history, "samples_between") and hasattr(history, "channel_spans"):
        spans = {c: sp for c, sp in history.channel_spans().items() if c in wanted}
        window_samples = history.samples_between(window.t_start, window.t_end)
    else:
        history = list(history)
        spans = _channel_spans(history, wanted)
        window_samples = [
            s for s in history if window.t_start <= s.timestamp <= window.t_end
        ]

    slack = window.interval
    missing = wanted - spans.keys()
    if missing:
        raise InsufficientHistoryError(
            f"no history at all for channels: {', '.join(sorted(missing))}"
        )
    for cid, (lo, hi) in spans.items():
        if lo > window.t_start + slack or hi < window.t_end - slack:
            raise InsufficientHistoryError(
                f"history for {cid!r} spans [{lo:.3f}, {hi:.3f}], "
                f"window needs [{window.t_start:.3f}, {window.t_end:.3f}]"
            )

    situation = build_situation(
        window_samples, specs, window, gap_policy=gap_policy, provenance=provenance
    )
    return Baseline(
        baseline_id=baseline_id or f"bl-{event_time:.3f}",
        situation=situation,
        event_time=event_time,
        lead_time=lead_time,
        label=label,
        created_at=event_time if created_at is None else created_at,
    )
