"""Command-line interface.

Subcommands: serve the monitoring service, compare two recordings, generate
synthetic scenarios, replay a recording into a running service, manage the
baseline store, and run the seeded detection study.
"""

from __future__ import annotations

import json
import sys
import time
from pathlib import Path

import click

from .config import load_config
from .errors import SituwatchError
from .ingest import load_baselines, parse_record
from .similarity import ChannelMode, SimilarityConfig, situation_similarity
from .simulator import default_scenario, generate, load_scenario, save_scenario
from .situation import (
    Baseline,
    ChannelSpec,
    Sample,
    SituationWindow,
    build_situation,
)
from .wire import report_to_dict


@click.group()
@click.version_option(package_name="situwatch")
def main():
    """Bio-signal situation comparison: windowed similarity ranks and alerts."""


# -- serve -------------------------------------------------------------------

@main.command()
@click.option("--config", "config_path", type=click.Path(), default=None, help="JSON config file")
@click.option("--host", default=None, help="bind host (overrides config)")
@click.option("--port", type=int, default=None, help="HTTP port (overrides config)")
@click.option("--data-dir", type=click.Path(), default=None, help="baseline store directory")
def serve(config_path, host, port, data_dir):
    """Run the monitoring service (HTTP API plus optional TCP ingest)."""
    from dataclasses import replace

    from .server import serve as run_service

    config = load_config(config_path)
    if host is not None:
        config = replace(config, host=host)
    if port is not None:
        config = replace(config, port=port)
    if data_dir is not None:
        config = replace(config, data_dir=data_dir)
    if config.static_dir is None:
        bundled = Path(__file__).resolve().parents[2] / "frontend" / "dist"
        if bundled.is_dir():
            config = replace(config, static_dir=str(bundled))
    run_service(config)


# -- compare -----------------------------------------------------------------

def _read_samples(path: Path) -> list[Sample]:
    samples = []
    for i, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        try:
            sample = parse_record(line)
        except SituwatchError as exc:
            raise click.ClickException(f"{path}:{i}: {exc}") from exc
        if sample is not None:
            samples.append(sample)
    if not samples:
        raise click.ClickException(f"{path}: no samples")
    return samples


def _situation_from_file(path: Path, n: int):
    samples = _read_samples(path)
    channel_ids = list(dict.fromkeys(s.channel_id for s in samples))
    specs = [ChannelSpec(channel_id=c) for c in channel_ids]
    t0 = min(s.timestamp for s in samples)
    t1 = max(s.timestamp for s in samples)
    window = SituationWindow(t_start=t0, t_end=t1, n_samples=n)
    return build_situation(samples, specs, window)


@main.command()
@click.argument("situation_csv", type=click.Path(exists=True, path_type=Path))
@click.argument("baseline_csv", type=click.Path(exists=True, path_type=Path))
@click.option("--method", type=click.Choice(["dtw", "euclid", "features"]), default="dtw")
@click.option("--band", type=int, default=None, help="Sakoe-Chiba half-width (grid steps)")
@click.option("--tau", type=float, default=1.0, help="distance scale of the percent map")
@click.option("--no-znorm", is_flag=True, help="compare raw values instead of z-scores")
@click.option("--n", "n_samples", type=int, default=90, help="grid points per situation")
@click.option("--lenient", is_flag=True, help="compare only the common channels")
@click.option("--report-dir", type=click.Path(path_type=Path), default=None,
              help="write figures + CSV alongside the JSON report")
def compare(situation_csv, baseline_csv, method, band, tau, no_znorm, n_samples, lenient, report_dir):
    """Rank SITUATION_CSV against BASELINE_CSV; prints a report as JSON."""
    query = _situation_from_file(situation_csv, n_samples)
    reference = _situation_from_file(baseline_csv, n_samples)
    baseline = Baseline(
        baseline_id=baseline_csv.stem,
        situation=reference,
        event_time=reference.window.t_end,
        lead_time=0.0,
        label=baseline_csv.stem,
        created_at=reference.window.t_end,
    )
    cfg = SimilarityConfig(
        method=method,
        znormalize=not no_znorm,
        dtw_band=band if band is not None else "full",
        tau=tau,
        channel_mode=ChannelMode.LENIENT if lenient else ChannelMode.STRICT,
    )
    try:
        report = situation_similarity(query, baseline, cfg)
    except SituwatchError as exc:
        raise click.ClickException(str(exc)) from exc
    click.echo(json.dumps(report_to_dict(report), indent=2))
    if report_dir is not None:
        from .report import render_comparison

        written = render_comparison(query, baseline, report, report_dir)
        click.echo(f"report written to {report_dir} ({len(written)} files)", err=True)


# -- simulate ----------------------------------------------------------------

@main.command()
@click.option("--scenario", "scenario_path", type=click.Path(exists=True, path_type=Path),
              default=None, help="scenario JSON (omit for the built-in default)")
@click.option("--out", "out_dir", type=click.Path(path_type=Path), required=True)
@click.option("--seed", type=int, default=None, help="override the scenario seed")
@click.option("--plot", is_flag=True, help="render the generated channels as figures")
def simulate(scenario_path, out_dir, seed, plot):
    """Generate a synthetic stream: replay.csv plus events.json ground truth."""
    from .ingest import format_record

    scenario = load_scenario(scenario_path) if scenario_path else default_scenario()
    if seed is not None:
        from dataclasses import replace

        scenario = replace(scenario, seed=seed)
    result = generate(scenario)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "replay.csv"
    with csv_path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# scenario seed {scenario.seed}, duration {scenario.duration} s\n")
        for sample in result.samples:
            fh.write(format_record(sample) + "\n")
    events_path = out_dir / "events.json"
    events_path.write_text(
        json.dumps(
            [
                {
                    "event_time": e.event_time,
                    "signature_lead": e.signature_lead,
                    "deltas": {c: {"ramp_to": v} for c, v in e.deltas.items()},
                }
                for e in result.events
            ],
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )
    save_scenario(scenario, out_dir / "scenario.json")
    click.echo(f"{len(result.samples)} samples -> {csv_path}")
    if plot:
        from .report import render_stream

        written = render_stream(result, scenario, out_dir / "figures")
        click.echo(f"{len(written)} figures -> {out_dir / 'figures'}", err=True)


# -- replay ------------------------------------------------------------------

@main.command()
@click.argument("replay_csv", type=click.Path(exists=True, path_type=Path))
@click.option("--target", required=True, help="service base URL, e.g. http://127.0.0.1:8787")
@click.option("--speed", type=float, default=0.0,
              help="data-time multiplier; 0 replays as fast as possible")
@click.option("--chunk", type=float, default=1.0, help="seconds of data per POST")
def replay(replay_csv, target, speed, chunk):
    """Stream a recording into a running service via POST /api/samples."""
    import httpx

    lines = replay_csv.read_text(encoding="utf-8").splitlines()
    records = []
    for line in lines:
        try:
            sample = parse_record(line)
        except SituwatchError:
            continue
        if sample is not None:
            records.append((sample.timestamp, line))
    if not records:
        raise click.ClickException("no samples in replay file")
    records.sort(key=lambda pair: pair[0])
    t0 = records[0][0]
    buckets: dict[int, list[str]] = {}
    for ts, line in records:
        buckets.setdefault(int((ts - t0) // chunk), []).append(line)
    accepted = rejected = 0
    with httpx.Client(base_url=target, timeout=30.0) as client:
        for i, key in enumerate(sorted(buckets)):
            if i and speed > 0:
                time.sleep(chunk / speed)
            resp = client.post("/api/samples", content="\n".join(buckets[key]) + "\n")
            resp.raise_for_status()
            body = resp.json()
            accepted += body["accepted"]
            rejected += body["rejected"]
    click.echo(json.dumps({"accepted": accepted, "rejected": rejected}))


# -- baseline store ----------------------------------------------------------

@main.group()
def baseline():
    """Inspect or prune the on-disk baseline store."""


@baseline.command("list")
@click.option("--data-dir", type=click.Path(path_type=Path), default=Path("situwatch-data"))
def baseline_list(data_dir):
    """List stored baselines."""
    baselines = load_baselines(data_dir)
    if not baselines:
        click.echo("no baselines")
        return
    for b in baselines:
        w = b.situation.window
        click.echo(
            f"{b.baseline_id}  label={b.label!r}  event={b.event_time:.1f}  "
            f"lead={b.lead_time:.0f}s  window=[{w.t_start:.1f}, {w.t_end:.1f}] n={w.n_samples}  "
            f"channels={','.join(b.situation.channel_ids)}"
        )


@baseline.command("rm")
@click.argument("baseline_id")
@click.option("--data-dir", type=click.Path(path_type=Path), default=Path("situwatch-data"))
def baseline_rm(baseline_id, data_dir):
    """Delete one stored baseline by id."""
    path = data_dir / f"{baseline_id}.json"
    if not path.exists():
        raise click.ClickException(f"no baseline {baseline_id!r} in {data_dir}")
    path.unlink()
    click.echo(f"removed {path}")


# -- study -------------------------------------------------------------------

@main.command()
@click.option("--scenario", "scenario_path", type=click.Path(exists=True, path_type=Path),
              default=None, help="scenario JSON (omit for the built-in default)")
@click.option("--trials", type=int, default=50)
@click.option("--out", "out_dir", type=click.Path(path_type=Path), default=None,
              help="write study.csv + figures here")
def study(scenario_path, trials, out_dir):
    """Run the seeded detection study and print its summary."""
    from .study import run_detection_study

    scenario = load_scenario(scenario_path) if scenario_path else None
    result = run_detection_study(scenario=scenario, trials=trials)
    click.echo(json.dumps(result.summary(), indent=2))
    if out_dir is not None:
        from .report import render_study

        written = render_study(result, out_dir)
        click.echo(f"{len(written)} report files -> {out_dir}", err=True)
    if result.hit_rate < 0.9 or result.max_false_alerts > 1:
        sys.exit(1)


if __name__ == "__main__":
    main()
