"""HTTP/TCP service around the engine: ingest, baselines, reports, alerts,
and a server-push event stream for the dashboard.

A single lock serializes every engine mutation, giving the arrival-order
semantics the pipeline needs; reads hand out plain JSON snapshots.  All
decisions run on data timestamps, so a replay pushed through the API at any
speed reproduces the in-process alert log.
"""

from __future__ import annotations

import json
import logging
import math
import queue
import socket
import socketserver
import threading
from pathlib import Path

from fastapi import Body, FastAPI, Request, Response
from fastapi.responses import JSONResponse, StreamingResponse
from fastapi.staticfiles import StaticFiles

from .config import ServiceConfig
from .engine import EngineConfig, SituationEngine
from .errors import (
    InsufficientHistoryError,
    InvalidConfigError,
    SituwatchError,
    UnknownBaselineError,
)
from .ingest import load_baselines, parse_record, save_baseline
from .prediction import Alert, AlertCleared
from .wire import (
    alert_to_dict,
    channel_spec_to_dict,
    policy_from_dict,
    policy_to_dict,
    report_to_dict,
    similarity_from_dict,
    similarity_to_dict,
)

logger = logging.getLogger(__name__)

STREAM_KEEPALIVE_S = 10.0
_SUBSCRIBER_QUEUE_SIZE = 4096


class MonitorService:
    """Owns the engine, the baseline store, and the event fan-out."""

    def __init__(self, config: ServiceConfig):
        self.config = config
        self.engine = SituationEngine(
            EngineConfig(
                specs=tuple(config.channels),
                duration=config.duration,
                n_samples=config.n_samples,
                stride=config.stride,
                retention=config.retention,
                gap_policy=config.gap_policy,
            ),
            policy=config.policy,
            similarity=config.similarity,
        )
        self._lock = threading.RLock()
        self._subscribers: list[queue.Queue] = []
        self.data_dir = Path(config.data_dir)
        for baseline in load_baselines(self.data_dir):
            try:
                self.engine.add_baseline(baseline)
            except ValueError as exc:
                logger.warning("not loading %s: %s", baseline.baseline_id, exc)

    # -- event fan-out -------------------------------------------------------

    def subscribe(self) -> queue.Queue:
        q: queue.Queue = queue.Queue(maxsize=_SUBSCRIBER_QUEUE_SIZE)
        with self._lock:
            self._subscribers.append(q)
        return q

    def unsubscribe(self, q: queue.Queue) -> None:
        with self._lock:
            if q in self._subscribers:
                self._subscribers.remove(q)

    def _broadcast(self, event_type: str, payload: dict) -> None:
        event = {"type": event_type, "data": payload}
        for q in list(self._subscribers):
            try:
                q.put_nowait(event)
            except queue.Full:
                logger.warning("dropping %s event for a slow stream subscriber", event_type)

    def _publish_tick(self, result) -> None:
        for report in result.reports:
            self._broadcast("report", report_to_dict(report))
        for emitted in result.emissions:
            if isinstance(emitted, Alert):
                self._broadcast("alert", alert_to_dict(emitted))
            elif isinstance(emitted, AlertCleared):
                self._broadcast("alert_cleared", alert_to_dict(emitted.alert))

    # -- mutations (each serialized under the lock) --------------------------

    def ingest_text(self, text: str) -> tuple[int, int]:
        """Parse and push wire-format lines, then advance the pipeline.

        Returns (accepted, rejected); malformed lines and out-of-retention
        samples count as rejected, never as errors.
        """
        samples = []
        rejected = 0
        for line in text.splitlines():
            try:
                sample = parse_record(line)
            except SituwatchError as exc:
                logger.debug("rejected ingest line: %s", exc)
                rejected += 1
                continue
            if sample is not None:
                samples.append(sample)
        with self._lock:
            accepted, dropped = self.engine.ingest(samples)
            result = self.engine.tick()
            self._publish_tick(result)
        return accepted, rejected + dropped

    def heartbeat(self) -> None:
        """Wall-clock-driven tick for streams that arrive on a raw socket."""
        with self._lock:
            self._publish_tick(self.engine.tick())

    def mark_event(
        self,
        event_time: float,
        label: str,
        lead_time: float | None = None,
        duration: float | None = None,
        n: int | None = None,
    ):
        with self._lock:
            baseline = self.engine.snapshot(
                event_time=event_time,
                label=label,
                lead_time=self.config.default_lead_time if lead_time is None else lead_time,
                duration=duration,
                n=n,
            )
            save_baseline(baseline, self.data_dir)
            return baseline

    def delete_baseline(self, baseline_id: str):
        with self._lock:
            baseline = self.engine.remove_baseline(baseline_id)
            path = self.data_dir / f"{baseline_id}.json"
            if path.exists():
                path.unlink()
            return baseline

    def update_config(self, policy_doc: dict | None, similarity_doc: dict | None) -> None:
        with self._lock:
            if policy_doc is not None:
                self.engine.policy = policy_from_dict(policy_doc)
            if similarity_doc is not None:
                self.engine.similarity = similarity_from_dict(similarity_doc)

    # -- snapshots ------------------------------------------------------------

    def status(self) -> dict:
        with self._lock:
            wm = self.engine.watermark()
            spans = self.engine.cursor.channel_spans()
            return {
                "watermark": wm if math.isfinite(wm) else None,
                "channels": {c: {"first": lo, "last": hi} for c, (lo, hi) in spans.items()},
                "baselines": len(self.engine.registry),
                "alerts_total": len(self.engine.alert_log),
                "firing": sorted(
                    bid
                    for bid, st in self.engine.alert_states.items()
                    if st.active_alert is not None
                ),
            }

    def trace(self, since: float, limit: int = 2000) -> dict:
        """Recent raw samples per channel for charting; thinned to ``limit``."""
        with self._lock:
            wm = self.engine.watermark()
            if not math.isfinite(wm):
                return {"watermark": None, "channels": {}}
            out = {}
            for spec in self.config.channels:
                buf = self.engine.cursor._buffers.get(spec.channel_id)
                if buf is None:
                    out[spec.channel_id] = {"t": [], "v": []}
                    continue
                ts, vs = buf.slice_arrays(since, math.inf)
                step = max(1, len(ts) // limit)
                out[spec.channel_id] = {
                    "t": [float(x) for x in ts[::step]],
                    "v": [float(x) for x in vs[::step]],
                }
            return {"watermark": wm, "channels": out}


def _error_response(status: int, message: str, field: str | None = None) -> JSONResponse:
    detail: dict = {"message": message}
    if field:
        detail["field"] = field
    return JSONResponse(status_code=status, content={"detail": detail})


def create_app(service: MonitorService) -> FastAPI:
    app = FastAPI(title="situwatch", version="0.1.0", docs_url=None, redoc_url=None)
    app.state.service = service

    @app.post("/api/samples")
    def post_samples(body: bytes = Body(default=b"")):
        accepted, rejected = service.ingest_text(body.decode("utf-8", errors="replace"))
        return {"accepted": accepted, "rejected": rejected}

    @app.get("/api/channels")
    def get_channels():
        return [channel_spec_to_dict(s) for s in service.config.channels]

    @app.post("/api/baselines")
    def post_baseline(doc: dict = Body(default=None)):
        if not isinstance(doc, dict) or "event_time" not in doc or "label" not in doc:
            return _error_response(400, "body must carry event_time and label")
        try:
            event_time = float(doc["event_time"])
            label = str(doc["label"])
            lead_time = float(doc["lead_time"]) if doc.get("lead_time") is not None else None
            duration = float(doc["duration"]) if doc.get("duration") is not None else None
            n = int(doc["n"]) if doc.get("n") is not None else None
        except (TypeError, ValueError):
            return _error_response(400, "malformed baseline request")
        try:
            baseline = service.mark_event(event_time, label, lead_time, duration, n)
        except InsufficientHistoryError as exc:
            return _error_response(409, str(exc))
        except (SituwatchError, ValueError) as exc:
            return _error_response(400, str(exc))
        from .ingest import baseline_to_dict

        return baseline_to_dict(baseline)

    @app.get("/api/baselines")
    def get_baselines():
        from .ingest import baseline_to_dict

        with service._lock:
            return [baseline_to_dict(b) for b in service.engine.registry]

    @app.delete("/api/baselines/{baseline_id}")
    def delete_baseline(baseline_id: str):
        try:
            service.delete_baseline(baseline_id)
        except UnknownBaselineError as exc:
            return _error_response(404, str(exc))
        return Response(status_code=204)

    @app.get("/api/similarity/latest")
    def get_latest():
        with service._lock:
            return {bid: report_to_dict(r) for bid, r in service.engine.latest_reports.items()}

    @app.get("/api/alerts")
    def get_alerts(since: float = 0.0):
        with service._lock:
            return [alert_to_dict(a) for a in service.engine.alerts_since(since)]

    @app.get("/api/config")
    def get_config():
        with service._lock:
            return {
                "policy": policy_to_dict(service.engine.policy),
                "similarity": similarity_to_dict(service.engine.similarity),
            }

    @app.put("/api/config")
    def put_config(doc: dict = Body(default=None)):
        if not isinstance(doc, dict):
            return _error_response(400, "body must be a JSON object")
        try:
            service.update_config(doc.get("policy"), doc.get("similarity"))
        except InvalidConfigError as exc:
            return _error_response(422, str(exc), field=exc.field)
        except (TypeError, ValueError) as exc:
            return _error_response(422, str(exc))
        return get_config()

    @app.get("/api/status")
    def get_status():
        return service.status()

    @app.get("/api/trace")
    def get_trace(since: float = 0.0, limit: int = 2000):
        return service.trace(since, limit)

    @app.get("/api/stream")
    def get_stream(request: Request):
        def event_source():
            q = service.subscribe()
            try:
                yield ": connected\n\n"
                while True:
                    try:
                        event = q.get(timeout=STREAM_KEEPALIVE_S)
                    except queue.Empty:
                        yield ": keepalive\n\n"
                        continue
                    yield f"event: {event['type']}\ndata: {json.dumps(event['data'])}\n\n"
            finally:
                service.unsubscribe(q)

        return StreamingResponse(event_source(), media_type="text/event-stream")

    static_dir = service.config.static_dir
    if static_dir and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="dashboard")

    return app


class _IngestHandler(socketserver.StreamRequestHandler):
    def handle(self):
        service: MonitorService = self.server.service  # type: ignore[attr-defined]
        buffered: list[str] = []
        for raw in self.rfile:
            buffered.append(raw.decode("utf-8", errors="replace"))
            if len(buffered) >= 256:
                service.ingest_text("".join(buffered))
                buffered.clear()
        if buffered:
            service.ingest_text("".join(buffered))


class TcpIngestServer(socketserver.ThreadingTCPServer):
    """Raw line-protocol listener; one thread per sensor gateway connection."""

    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, host: str, port: int, service: MonitorService):
        super().__init__((host, port), _IngestHandler)
        self.service = service

    def start_background(self) -> threading.Thread:
        thread = threading.Thread(target=self.serve_forever, daemon=True, name="tcp-ingest")
        thread.start()
        return thread


def serve(config: ServiceConfig) -> None:
    """Run the HTTP service (and the TCP ingest listener when configured)."""
    import uvicorn

    service = MonitorService(config)
    if config.tcp_port is not None:
        TcpIngestServer(config.host, config.tcp_port, service).start_background()
        logger.info("tcp ingest listening on %s:%d", config.host, config.tcp_port)
    app = create_app(service)
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
