"""File reports: matplotlib figures rendered next to delimited output.

Every CLI path that produces numbers can also leave behind a directory with
the same numbers as CSV plus the figures a reviewer actually looks at.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .similarity import SimilarityReport
from .simulator import GenerationResult, Scenario
from .situation import Baseline, Situation
from .study import StudyResult
from .wire import report_to_dict

_FIG_DPI = 110


def _ensure(out_dir: str | Path) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def render_comparison(
    query: Situation, baseline: Baseline, report: SimilarityReport, out_dir: str | Path
) -> list[Path]:
    """Per-channel overlay figures plus channels.csv and report.json."""
    out = _ensure(out_dir)
    written = [out / "report.json", out / "channels.csv"]
    written[0].write_text(json.dumps(report_to_dict(report), indent=2) + "\n", encoding="utf-8")
    with written[1].open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["channel_id", "distance", "similarity_percent"])
        for cid, score in report.per_channel.items():
            writer.writerow([cid, repr(score.distance), repr(score.similarity_percent)])
        writer.writerow(["aggregate", "", repr(report.aggregate_percent)])

    ref = baseline.situation
    for cid, score in report.per_channel.items():
        fig, ax = plt.subplots(figsize=(8, 3))
        ax.plot(ref.grid - ref.window.t_start, ref.channels[cid], label="baseline", lw=1.2)
        ax.plot(
            query.grid - query.window.t_start,
            query.channels[cid],
            label="situation",
            lw=1.2,
            alpha=0.85,
        )
        ax.set_title(f"{cid}: {score.similarity_percent:.1f}% (distance {score.distance:.4g})")
        ax.set_xlabel("seconds into window")
        ax.legend(loc="best", fontsize=8)
        fig.tight_layout()
        path = out / f"channel_{cid}.png"
        fig.savefig(path, dpi=_FIG_DPI)
        plt.close(fig)
        written.append(path)
    return written


def render_stream(result: GenerationResult, scenario: Scenario, out_dir: str | Path) -> list[Path]:
    """One figure per generated channel with event markers and the signature window."""
    out = _ensure(out_dir)
    by_channel: dict[str, tuple[list[float], list[float]]] = {}
    for s in result.samples:
        ts, vs = by_channel.setdefault(s.channel_id, ([], []))
        ts.append(s.timestamp)
        vs.append(s.value)
    written = []
    for cid, (ts, vs) in by_channel.items():
        fig, ax = plt.subplots(figsize=(10, 2.8))
        ax.plot(ts, vs, lw=0.7)
        for ev in result.events:
            ax.axvspan(ev.event_time - ev.signature_lead, ev.event_time, color="tab:orange", alpha=0.15)
            ax.axvline(ev.event_time, color="tab:red", lw=1.0)
        ax.set_title(f"{cid} (seed {scenario.seed})")
        ax.set_xlabel("seconds")
        fig.tight_layout()
        path = out / f"stream_{cid}.png"
        fig.savefig(path, dpi=_FIG_DPI)
        plt.close(fig)
        written.append(path)
    return written


def render_study(result: StudyResult, out_dir: str | Path, max_trial_figs: int = 6) -> list[Path]:
    """study.csv plus rank-trajectory figures and the hit/false summary."""
    out = _ensure(out_dir)
    csv_path = out / "study.csv"
    with csv_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["trial", "hit", "false_alerts", "first_raise", "detection_advance_s", "peak_rank"]
        )
        for o in result.outcomes:
            peak = max((r for _, r in o.rank_history), default=float("nan"))
            writer.writerow(
                [
                    o.trial_index,
                    int(o.hit),
                    o.false_alerts,
                    o.raise_times[0] if o.raise_times else "",
                    f"{o.detection_advance:.1f}" if o.detection_advance is not None else "",
                    f"{peak:.3f}",
                ]
            )
    summary_path = out / "summary.json"
    summary_path.write_text(json.dumps(result.summary(), indent=2) + "\n", encoding="utf-8")
    written = [csv_path, summary_path]

    event = result.scenario.events[0]
    fig, ax = plt.subplots(figsize=(9, 4))
    for o in result.outcomes:
        if not o.rank_history:
            continue
        t, r = zip(*o.rank_history)
        ax.plot(t, r, lw=0.6, alpha=0.35, color="tab:blue")
    ax.axvspan(
        event.event_time - event.signature_lead,
        event.event_time,
        color="tab:orange",
        alpha=0.2,
        label="signature window",
    )
    ax.axhline(result.policy.theta_on, color="tab:red", lw=1.0, ls="--", label="theta_on")
    ax.axhline(result.policy.theta_off, color="tab:green", lw=1.0, ls=":", label="theta_off")
    ax.set_xlabel("window end (s)")
    ax.set_ylabel("aggregate rank (%)")
    ax.set_title(
        f"{result.trials} trials: hit rate {100 * result.hit_rate:.0f}%, "
        f"max false alerts {result.max_false_alerts}"
    )
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    ranks_path = out / "rank_trajectories.png"
    fig.savefig(ranks_path, dpi=_FIG_DPI)
    plt.close(fig)
    written.append(ranks_path)

    for o in result.outcomes[:max_trial_figs]:
        if not o.rank_history:
            continue
        t, r = zip(*o.rank_history)
        fig, ax = plt.subplots(figsize=(8, 3))
        ax.plot(t, r, marker="o", ms=2.5, lw=1.0)
        ax.axvspan(
            event.event_time - event.signature_lead, event.event_time,
            color="tab:orange", alpha=0.2,
        )
        ax.axhline(result.policy.theta_on, color="tab:red", lw=1.0, ls="--")
        ax.axhline(result.policy.theta_off, color="tab:green", lw=1.0, ls=":")
        for raise_t in o.raise_times:
            ax.axvline(raise_t, color="tab:red", lw=1.2)
        ax.set_title(f"trial {o.trial_index}: {'hit' if o.hit else 'miss'}")
        ax.set_xlabel("window end (s)")
        ax.set_ylabel("rank (%)")
        fig.tight_layout()
        path = out / f"trial_{o.trial_index:03d}.png"
        fig.savefig(path, dpi=_FIG_DPI)
        plt.close(fig)
        written.append(path)
    return written
