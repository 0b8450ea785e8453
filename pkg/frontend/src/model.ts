// The view model and its pure update functions.
//
// Every state change originates from API data; nothing here recomputes
// similarity, and every merge is idempotent so stream events and reconnect
// backfills can overlap freely.

import type { Alert, Policy, Report, TraceDoc } from "./types.js";

export const TRACE_HORIZON_S = 30 * 60; // rolling window kept per channel
export const MAX_TRACE_POINTS = 4000; // per channel, drop-oldest
export const MAX_RANK_POINTS = 600; // per baseline, drop-oldest

export type Connection = "connecting" | "live" | "degraded";

export type RankPoint = { t: number; percent: number };
export type TracePoint = { t: number; v: number };

export type ViewModel = {
  connection: Connection;
  watermark: number | null;
  traces: Record<string, TracePoint[]>;
  rankHistory: Record<string, RankPoint[]>;
  latestRank: Record<string, number>;
  alerts: Alert[]; // newest last; active ones have cleared_at === null
  toasts: string[];
};

export function emptyModel(): ViewModel {
  return {
    connection: "connecting",
    watermark: null,
    traces: {},
    rankHistory: {},
    latestRank: {},
    alerts: [],
    toasts: [],
  };
}

export function clampPercent(x: number): number {
  if (!Number.isFinite(x)) return 0;
  return Math.min(100, Math.max(0, x));
}

/** Displayed numbers are received values formatted to 1 decimal. */
export function fmt1(x: number | null | undefined): string {
  return x === null || x === undefined || !Number.isFinite(x) ? "–" : x.toFixed(1);
}

/** Merge one report; applying the same report twice changes nothing. */
export function applyReport(vm: ViewModel, report: Report): void {
  const percent = clampPercent(report.aggregate_percent);
  const t = report.window.t_end;
  const history = (vm.rankHistory[report.baseline_id] ??= []);
  if (!history.some((p) => p.t === t)) {
    history.push({ t, percent });
    history.sort((a, b) => a.t - b.t);
    if (history.length > MAX_RANK_POINTS) history.splice(0, history.length - MAX_RANK_POINTS);
  }
  const last = history[history.length - 1];
  vm.latestRank[report.baseline_id] = last.percent;
  if (vm.watermark === null || t > vm.watermark) vm.watermark = t;
}

/** Merge one alert (raise); duplicates by id are ignored. */
export function applyAlert(vm: ViewModel, alert: Alert): void {
  const existing = vm.alerts.find((a) => a.alert_id === alert.alert_id);
  if (existing) {
    if (alert.cleared_at !== null && existing.cleared_at === null) {
      existing.cleared_at = alert.cleared_at;
    }
    return;
  }
  vm.alerts.push({ ...alert, rank_percent: clampPercent(alert.rank_percent) });
  vm.alerts.sort((a, b) => a.raised_at - b.raised_at);
}

export function applyAlertCleared(vm: ViewModel, alert: Alert): void {
  const existing = vm.alerts.find((a) => a.alert_id === alert.alert_id);
  if (existing) {
    existing.cleared_at = alert.cleared_at;
  } else {
    applyAlert(vm, alert); // clear seen before raise (backfill race): keep it
  }
}

export function activeAlerts(vm: ViewModel): Alert[] {
  return vm.alerts.filter((a) => a.cleared_at === null);
}

/** Reconnect backfill: latest reports + alert log, merged idempotently. */
export function backfill(vm: ViewModel, latest: Record<string, Report>, alerts: Alert[]): void {
  for (const report of Object.values(latest)) applyReport(vm, report);
  for (const alert of alerts) applyAlert(vm, alert);
}

/** Replace channel traces from a trace poll, bounded to the rolling window. */
export function applyTrace(vm: ViewModel, doc: TraceDoc): void {
  if (doc.watermark !== null && (vm.watermark === null || doc.watermark > vm.watermark)) {
    vm.watermark = doc.watermark;
  }
  const horizonStart = vm.watermark === null ? -Infinity : vm.watermark - TRACE_HORIZON_S;
  for (const [channel, cols] of Object.entries(doc.channels)) {
    const points: TracePoint[] = [];
    for (let i = 0; i < cols.t.length; i++) {
      if (cols.t[i] >= horizonStart) points.push({ t: cols.t[i], v: cols.v[i] });
    }
    if (points.length > MAX_TRACE_POINTS) points.splice(0, points.length - MAX_TRACE_POINTS);
    vm.traces[channel] = points;
  }
}

export function pushToast(vm: ViewModel, message: string, max = 5): void {
  vm.toasts.push(message);
  if (vm.toasts.length > max) vm.toasts.splice(0, vm.toasts.length - max);
}

export type PolicyErrors = Partial<Record<keyof Policy, string>>;

/** Client-side mirror of the alert policy invariants; the server re-checks. */
export function validatePolicy(p: Policy): PolicyErrors {
  const errors: PolicyErrors = {};
  if (!(p.theta_on > 0 && p.theta_on <= 100)) {
    errors.theta_on = "must be in (0, 100]";
  }
  if (!(p.theta_off >= 0 && p.theta_off < 100)) {
    errors.theta_off = "must be in [0, 100)";
  }
  if (!errors.theta_on && !errors.theta_off && p.theta_off >= p.theta_on) {
    errors.theta_off = "must be strictly below theta_on";
  }
  if (!(Number.isInteger(p.min_consecutive) && p.min_consecutive >= 1)) {
    errors.min_consecutive = "must be an integer >= 1";
  }
  return errors;
}
