"""Independent reference implementations used as test oracles.

Everything here is deliberately naive and kept separate from the package
code paths it checks: pointwise scans, exhaustive enumeration, plain-math
formula evaluation.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np


def interp_oracle(grid, ts, vs) -> list[float]:
    """Piecewise-linear interpolation with edge clamping, one point at a time."""
    out = []
    for g in grid:
        if g <= ts[0]:
            out.append(vs[0])
            continue
        if g >= ts[-1]:
            out.append(vs[-1])
            continue
        k = 0
        while not (ts[k] <= g <= ts[k + 1]):
            k += 1
        if ts[k + 1] == ts[k]:
            out.append(vs[k + 1])
            continue
        frac = (g - ts[k]) / (ts[k + 1] - ts[k])
        out.append(vs[k] * (1 - frac) + vs[k + 1] * frac)
    return out


@lru_cache(maxsize=None)
def _path_arrays(n: int, m: int):
    """Every monotone path (0,0) -> (n-1,m-1) as padded index arrays + mask."""
    paths: list[tuple[tuple[int, int], ...]] = []
    stack: list[tuple[tuple[int, int], ...]] = [((n - 1, m - 1),)]
    while stack:
        partial = stack.pop()
        i, j = partial[-1]
        if i == 0 and j == 0:
            paths.append(partial[::-1])
            continue
        for pi, pj in ((i - 1, j - 1), (i - 1, j), (i, j - 1)):
            if pi >= 0 and pj >= 0:
                stack.append(partial + ((pi, pj),))
    longest = max(len(p) for p in paths)
    ii = np.zeros((len(paths), longest), dtype=np.int64)
    jj = np.zeros((len(paths), longest), dtype=np.int64)
    mask = np.zeros((len(paths), longest), dtype=np.float64)
    for r, p in enumerate(paths):
        for c, (i, j) in enumerate(p):
            ii[r, c] = i
            jj[r, c] = j
            mask[r, c] = 1.0
    return ii, jj, mask


def dtw_enumeration_oracle(a, b) -> float:
    """Min cumulative |a_i - b_j| over every enumerated monotone path."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    ii, jj, mask = _path_arrays(len(a), len(b))
    costs = (np.abs(a[ii] - b[jj]) * mask).sum(axis=1)
    return float(costs.min())


def dtw_full_dp_oracle(a, b) -> float:
    """Textbook full-matrix DTW recurrence (no band, no rolling rows)."""
    n, m = len(a), len(b)
    d = [[math.inf] * m for _ in range(n)]
    for i in range(n):
        for j in range(m):
            cost = abs(a[i] - b[j])
            if i == 0 and j == 0:
                d[i][j] = cost
            elif i == 0:
                d[i][j] = cost + d[i][j - 1]
            elif j == 0:
                d[i][j] = cost + d[i - 1][j]
            else:
                d[i][j] = cost + min(d[i - 1][j - 1], d[i - 1][j], d[i][j - 1])
    return d[n - 1][m - 1]


# --- plain-math formula re-implementations (no numpy) ----------------------

def znorm_oracle(xs) -> list[float]:
    n = len(xs)
    mean = sum(xs) / n
    var = sum((x - mean) ** 2 for x in xs) / n
    std = math.sqrt(var)
    if std <= 1e-12:
        return [0.0] * n
    return [(x - mean) / std for x in xs]


def euclid_oracle(a, b) -> float:
    return math.sqrt(sum((x - y) ** 2 for x, y in zip(a, b)) / len(a))


def features_oracle(xs) -> list[float]:
    n = len(xs)
    mean = sum(xs) / n
    std = math.sqrt(sum((x - mean) ** 2 for x in xs) / n)
    xbar = (n - 1) / 2
    sxx = sum((i - xbar) ** 2 for i in range(n))
    slope = sum((i - xbar) * (x - mean) for i, x in enumerate(xs)) / sxx
    diffs = [xs[i + 1] - xs[i] for i in range(n - 1)]
    diff_rms = math.sqrt(sum(d * d for d in diffs) / len(diffs))
    signs = [1 if x > mean else -1 for x in xs if x != mean]
    crossings = sum(1 for i in range(len(signs) - 1) if signs[i] != signs[i + 1])
    energy = sum(x * x for x in xs) / n
    return [mean, std, min(xs), max(xs), slope, diff_rms, float(crossings), energy]


def percent_oracle(distance: float, tau: float) -> float:
    return 100.0 * math.exp(-distance / tau)


def channel_distance_oracle(query, reference, method: str, znormalize: bool) -> float:
    """The per-channel distance chain, written straight off the formulas."""
    if method == "euclid":
        a = znorm_oracle(query) if znormalize else list(query)
        b = znorm_oracle(reference) if znormalize else list(reference)
        return euclid_oracle(a, b)
    if method == "dtw":
        a = znorm_oracle(query) if znormalize else list(query)
        b = znorm_oracle(reference) if znormalize else list(reference)
        return dtw_full_dp_oracle(a, b) / (len(a) + len(b))
    fq = features_oracle(query)
    fr = features_oracle(reference)
    scaled = []
    for q, r in zip(fq, fr):
        scale = abs(r) if r != 0.0 else 1.0
        scaled.append((q - r) / scale)
    return math.sqrt(sum(s * s for s in scaled) / len(scaled))


def aggregate_oracle(query_channels, ref_channels, weights, method, znormalize, tau):
    """Weighted-mean aggregate percent over channels, formulas end to end."""
    total_w = 0.0
    acc = 0.0
    per_channel = {}
    for cid in query_channels:
        d = channel_distance_oracle(query_channels[cid], ref_channels[cid], method, znormalize)
        pct = percent_oracle(d, tau)
        per_channel[cid] = (d, pct)
        w = weights.get(cid, 1.0)
        total_w += w
        acc += w * pct
    return acc / total_w, per_channel


def alert_reference(ranks, theta_on, theta_off, min_consecutive):
    """Reference hysteresis simulation; returns the emission sequence as
    ('raise', index) / ('clear', index) tuples."""
    events = []
    firing = False
    hits = 0
    for i, r in enumerate(ranks):
        if firing:
            if r < theta_off:
                events.append(("clear", i))
                firing = False
                hits = 0
        else:
            if r >= theta_on:
                hits += 1
                if hits >= min_consecutive:
                    events.append(("raise", i))
                    firing = True
            else:
                hits = 0
    return events
