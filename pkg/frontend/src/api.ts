// Thin fetch wrappers plus the reconnecting event stream.

import type {
  Alert,
  BaselineDoc,
  ChannelSpec,
  Report,
  ServiceConfig,
  StatusDoc,
  TraceDoc,
} from "./types.js";

export class ApiError extends Error {
  constructor(public status: number, message: string, public field?: string) {
    super(message);
  }
}

async function request<T>(path: string, init?: RequestInit): Promise<T> {
  const resp = await fetch(path, init);
  if (!resp.ok) {
    let message = `${resp.status}`;
    let field: string | undefined;
    try {
      const body = await resp.json();
      message = body?.detail?.message ?? JSON.stringify(body);
      field = body?.detail?.field;
    } catch {
      /* non-JSON error body */
    }
    throw new ApiError(resp.status, message, field);
  }
  return (await resp.json()) as T;
}

export const api = {
  channels: () => request<ChannelSpec[]>("/api/channels"),
  status: () => request<StatusDoc>("/api/status"),
  trace: (since: number) => request<TraceDoc>(`/api/trace?since=${since}`),
  latest: () => request<Record<string, Report>>("/api/similarity/latest"),
  alerts: (since = 0) => request<Alert[]>(`/api/alerts?since=${since}`),
  baselines: () => request<BaselineDoc[]>("/api/baselines"),
  config: () => request<ServiceConfig>("/api/config"),

  markEvent: (eventTime: number, label: string, leadTime?: number) =>
    request<BaselineDoc>("/api/baselines", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({
        event_time: eventTime,
        label,
        ...(leadTime !== undefined ? { lead_time: leadTime } : {}),
      }),
    }),

  deleteBaseline: (id: string) =>
    fetch(`/api/baselines/${encodeURIComponent(id)}`, { method: "DELETE" }),

  putConfig: (config: Partial<ServiceConfig>) =>
    request<ServiceConfig>("/api/config", {
      method: "PUT",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(config),
    }),
};

export type StreamHandlers = {
  onReport: (r: Report) => void;
  onAlert: (a: Alert) => void;
  onAlertCleared: (a: Alert) => void;
  onOpen: () => void; // fired on every (re)connect; caller backfills here
  onDown: () => void;
};

/** Subscribe to /api/stream with exponential backoff reconnects. */
export function openStream(handlers: StreamHandlers): () => void {
  let source: EventSource | null = null;
  let closed = false;
  let backoffMs = 500;
  let timer: number | undefined;

  const connect = () => {
    if (closed) return;
    source = new EventSource("/api/stream");
    source.onopen = () => {
      backoffMs = 500;
      handlers.onOpen();
    };
    source.addEventListener("report", (ev) =>
      handlers.onReport(JSON.parse((ev as MessageEvent).data)),
    );
    source.addEventListener("alert", (ev) =>
      handlers.onAlert(JSON.parse((ev as MessageEvent).data)),
    );
    source.addEventListener("alert_cleared", (ev) =>
      handlers.onAlertCleared(JSON.parse((ev as MessageEvent).data)),
    );
    source.onerror = () => {
      handlers.onDown();
      source?.close();
      if (!closed) {
        timer = window.setTimeout(connect, backoffMs);
        backoffMs = Math.min(backoffMs * 2, 15_000);
      }
    };
  };
  connect();
  return () => {
    closed = true;
    if (timer !== undefined) window.clearTimeout(timer);
    source?.close();
  };
}
