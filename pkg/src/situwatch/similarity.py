"""Distance kernels and the percent similarity rank between situations.

Per-channel series are compared with one of three methods (plain RMS
distance, banded dynamic time warping, or an 8-feature summary) and the
resulting distances map onto (0, 100] via ``100 * exp(-d / tau)``, so an
identical pair ranks exactly 100 and the rank decays monotonically with
distance.  Channel ranks aggregate as a weighted mean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Union

import numpy as np

from .errors import (
    BandTooNarrowError,
    EmptySeriesError,
    InvalidConfigError,
    LengthMismatchError,
    NoCommonChannelsError,
    NonFiniteValueError,
    SeriesTooShortError,
)
from .situation import Baseline, Situation, SituationWindow

FULL_BAND = "full"
DEFAULT_DTW_BAND = 8
DEFAULT_TAU = 1.0

try:  # the jitted kernel is a big win on the hot path, but optional
    import numba

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False


class SimilarityMethod(str, Enum):
    EUCLID = "euclid"
    DTW = "dtw"
    FEATURES = "features"


class ChannelMode(str, Enum):
    STRICT = "strict"  # channel sets must be identical
    LENIENT = "lenient"  # compare the intersection, record the rest as skipped


@dataclass(frozen=True)
class SimilarityConfig:
    """Knobs for one similarity computation.

    ``dtw_band`` is the Sakoe-Chiba half-width in grid steps, or "full" for
    an unconstrained alignment.  ``tau`` is the distance scale of the percent
    map.  ``channel_weights`` defaults every missing channel to weight 1.
    """

    method: SimilarityMethod = SimilarityMethod.DTW
    znormalize: bool = True
    dtw_band: Union[int, str] = DEFAULT_DTW_BAND
    tau: float = DEFAULT_TAU
    channel_weights: Mapping[str, float] = field(default_factory=dict)
    channel_mode: ChannelMode = ChannelMode.STRICT

    def __post_init__(self):
        object.__setattr__(self, "method", SimilarityMethod(self.method))
        object.__setattr__(self, "channel_mode", ChannelMode(self.channel_mode))
        if not (math.isfinite(self.tau) and self.tau > 0):
            raise InvalidConfigError("tau", f"must be a positive finite number, got {self.tau!r}")
        if isinstance(self.dtw_band, str):
            if self.dtw_band != FULL_BAND:
                raise InvalidConfigError("dtw_band", f"must be an integer >= 0 or 'full', got {self.dtw_band!r}")
        elif self.dtw_band < 0:
            raise InvalidConfigError("dtw_band", f"must be >= 0, got {self.dtw_band}")
        for cid, w in self.channel_weights.items():
            if not math.isfinite(w) or w < 0:
                raise InvalidConfigError("channel_weights", f"weight for {cid!r} must be finite and >= 0")
        if self.channel_weights and not any(w > 0 for w in self.channel_weights.values()):
            raise InvalidConfigError("channel_weights", "at least one weight must be > 0")

    def weight(self, channel_id: str) -> float:
        return float(self.channel_weights.get(channel_id, 1.0))


@dataclass(frozen=True)
class ChannelScore:
    distance: float
    similarity_percent: float


@dataclass(frozen=True)
class SimilarityReport:
    """Per-channel and aggregate percent rank of one situation against one baseline."""

    baseline_id: str
    window: SituationWindow
    per_channel: Mapping[str, ChannelScore]
    aggregate_percent: float
    method: SimilarityMethod
    computed_at: float
    skipped_channels: tuple[str, ...] = ()


@dataclass(frozen=True)
class FeatureVector:
    """Eight shape summaries of one series; see extract_features."""

    mean: float
    std: float
    min: float
    max: float
    slope: float
    diff_rms: float
    zero_crossings: int
    energy: float

    def as_array(self) -> np.ndarray:
        return np.array(
            [
                self.mean,
                self.std,
                self.min,
                self.max,
                self.slope,
                self.diff_rms,
                float(self.zero_crossings),
                self.energy,
            ]
        )


def _as_series(x, name: str = "series") -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if arr.size == 0:
        raise EmptySeriesError(f"{name} must not be empty")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteValueError(f"{name} contains non-finite values")
    return arr


def znormalize(series) -> np.ndarray:
    """Shift to mean 0 and scale to population std 1; all-zeros if std is ~0.

    The zero-variance cutoff scales with the data magnitude: a constant
    series carries rounding noise of order ulp(|x|), which dwarfs any fixed
    absolute threshold once |x| is large.
    """
    arr = _as_series(series)
    mean = arr.mean()
    std = arr.std()  # population (ddof=0)
    if std <= 1e-12 * max(1.0, float(np.abs(arr).max())):
        return np.zeros_like(arr)
    return (arr - mean) / std


def euclid_distance(a, b) -> float:
    """RMS pointwise distance sqrt(sum((a_i - b_i)^2) / n)."""
    a = _as_series(a, "a")
    b = _as_series(b, "b")
    if len(a) != len(b):
        raise LengthMismatchError(f"series lengths differ: {len(a)} vs {len(b)}")
    diff = a - b
    return float(np.sqrt(diff.dot(diff) / len(a)))


if _HAVE_NUMBA:

    @numba.njit(cache=True)
    def _dtw_banded(a, b, band):  # pragma: no cover - exercised via dtw_distance
        n = a.shape[0]
        m = b.shape[0]
        inf = np.inf
        prev = np.full(m, inf)
        cur = np.full(m, inf)
        for i in range(n):
            lo = i - band
            if lo < 0:
                lo = 0
            hi = i + band
            if hi > m - 1:
                hi = m - 1
            for j in range(m):
                cur[j] = inf
            for j in range(lo, hi + 1):
                cost = abs(a[i] - b[j])
                if i == 0 and j == 0:
                    cur[j] = cost
                    continue
                best = inf
                if i > 0:
                    if prev[j] < best:
                        best = prev[j]  # up
                    if j > 0 and prev[j - 1] < best:
                        best = prev[j - 1]  # diagonal
                if j > 0 and cur[j - 1] < best:
                    best = cur[j - 1]  # right
                cur[j] = cost + best
            prev, cur = cur, prev
        return prev[m - 1]

else:  # pragma: no cover - numba is a declared dependency

    def _dtw_banded(a, b, band):
        n, m = len(a), len(b)
        prev = np.full(m, np.inf)
        cur = np.full(m, np.inf)
        for i in range(n):
            lo = max(0, i - band)
            hi = min(m - 1, i + band)
            cur[:] = np.inf
            for j in range(lo, hi + 1):
                cost = abs(a[i] - b[j])
                if i == 0 and j == 0:
                    cur[j] = cost
                    continue
                best = np.inf
                if i > 0:
                    best = min(best, prev[j])
                    if j > 0:
                        best = min(best, prev[j - 1])
                if j > 0:
                    best = min(best, cur[j - 1])
                cur[j] = cost + best
            prev, cur = cur, prev
        return prev[m - 1]


def dtw_distance(a, b, band: Union[int, str] = FULL_BAND) -> float:
    """Minimal cumulative |a_i - b_j| path cost under a Sakoe-Chiba band.

    Steps are diagonal, up, and right with no step weights, so the cost is
    symmetric in its arguments.  A numeric band is the half-width |i - j| may
    reach; it must be at least |len(a) - len(b)| for a path to connect the
    corners.  The returned cost is unnormalized.
    """
    a = _as_series(a, "a")
    b = _as_series(b, "b")
    n, m = len(a), len(b)
    if band == FULL_BAND:
        band_width = max(n, m)
    else:
        band_width = int(band)
        if band_width < 0:
            raise BandTooNarrowError(f"band must be >= 0, got {band_width}")
        if band_width < abs(n - m):
            raise BandTooNarrowError(
                f"band {band_width} cannot connect corners of a {n}x{m} grid "
                f"(needs >= {abs(n - m)})"
            )
    return float(_dtw_banded(a, b, band_width))


def extract_features(series) -> FeatureVector:
    """Summarize a series as 8 shape features.

    slope is the least-squares slope against index 0..n-1; diff_rms is the
    RMS of first differences; zero_crossings counts strict sign changes of
    the mean-centered series with zeros skipped; energy is the mean square.
    """
    arr = _as_series(series)
    n = len(arr)
    if n < 2:
        raise SeriesTooShortError(f"features need at least 2 points, got {n}")
    mean = float(arr.mean())
    centered = arr - mean
    std = float(arr.std())
    idx = np.arange(n, dtype=np.float64)
    idx_c = idx - idx.mean()
    slope = float(centered.dot(idx_c) / idx_c.dot(idx_c))
    diffs = np.diff(arr)
    diff_rms = float(np.sqrt(diffs.dot(diffs) / len(diffs)))
    signs = np.sign(centered)
    signs = signs[signs != 0]
    crossings = int(np.count_nonzero(signs[1:] != signs[:-1])) if signs.size > 1 else 0
    energy = float(arr.dot(arr) / n)
    return FeatureVector(
        mean=mean,
        std=std,
        min=float(arr.min()),
        max=float(arr.max()),
        slope=slope,
        diff_rms=diff_rms,
        zero_crossings=crossings,
        energy=energy,
    )


def percent_from_distance(distance: float, tau: float) -> float:
    """Map a distance in [0, inf) onto (0, 100]; exactly 100 at distance 0."""
    return 100.0 * math.exp(-distance / tau)


def _feature_distance(query: np.ndarray, reference: np.ndarray) -> float:
    # The reference (baseline) side sets the per-component scale so a stored
    # baseline yields stable comparisons; zero-scale components fall back to 1.
    scale = np.abs(reference)
    scale[scale == 0.0] = 1.0
    diff = (query - reference) / scale
    return float(np.sqrt(diff.dot(diff) / len(diff)))


def channel_similarity(query, reference, cfg: SimilarityConfig) -> ChannelScore:
    """Distance and percent rank of one query series against one reference series.

    The reference is the baseline side; under the features method it provides
    the per-component scaling.
    """
    if cfg.method is SimilarityMethod.EUCLID:
        a, b = (znormalize(query), znormalize(reference)) if cfg.znormalize else (query, reference)
        d = euclid_distance(a, b)
    elif cfg.method is SimilarityMethod.DTW:
        a, b = (znormalize(query), znormalize(reference)) if cfg.znormalize else (query, reference)
        raw = dtw_distance(a, b, cfg.dtw_band)
        d = raw / (len(np.asarray(query)) + len(np.asarray(reference)))
    else:
        fq = extract_features(query).as_array()
        fr = extract_features(reference).as_array()
        d = _feature_distance(fq, fr)
    return ChannelScore(distance=d, similarity_percent=percent_from_distance(d, cfg.tau))


def situation_similarity(
    situation: Situation,
    baseline: Baseline,
    cfg: SimilarityConfig,
    *,
    computed_at: float | None = None,
) -> SimilarityReport:
    """Rank a situation of interest against one baseline, channel by channel.

    Channel sets must match exactly under ChannelMode.STRICT; under LENIENT
    the intersection is compared and everything else lands in
    ``skipped_channels``.  The aggregate is the weight-averaged percent over
    compared channels.  Lengths may differ only under the DTW method.
    """
    ref = baseline.situation
    q_ids = set(situation.channels)
    r_ids = set(ref.channels)
    if cfg.channel_mode is ChannelMode.STRICT:
        if q_ids != r_ids:
            raise NoCommonChannelsError(
                f"channel sets differ (strict mode): situation has {sorted(q_ids)}, "
                f"baseline {baseline.baseline_id!r} has {sorted(r_ids)}"
            )
        compared = [c for c in situation.channels if c in r_ids]
        skipped: tuple[str, ...] = ()
    else:
        compared = [c for c in situation.channels if c in r_ids]
        skipped = tuple(sorted(q_ids.symmetric_difference(r_ids)))
        if not compared:
            raise NoCommonChannelsError(
                f"no common channels between situation and baseline {baseline.baseline_id!r}"
            )
    if cfg.method is not SimilarityMethod.DTW and situation.window.n_samples != ref.window.n_samples:
        raise LengthMismatchError(
            f"method {cfg.method.value} needs equal grid lengths, "
            f"got {situation.window.n_samples} vs {ref.window.n_samples}"
        )

    per_channel: dict[str, ChannelScore] = {}
    total_weight = 0.0
    weighted = 0.0
    for cid in compared:
        score = channel_similarity(situation.channels[cid], ref.channels[cid], cfg)
        per_channel[cid] = score
        w = cfg.weight(cid)
        total_weight += w
        weighted += w * score.similarity_percent
    if total_weight <= 0.0:
        raise NoCommonChannelsError("all compared channels carry zero weight")

    return SimilarityReport(
        baseline_id=baseline.baseline_id,
        window=situation.window,
        per_channel=per_channel,
        aggregate_percent=weighted / total_weight,
        method=cfg.method,
        computed_at=situation.window.t_end if computed_at is None else computed_at,
        skipped_channels=skipped,
    )
