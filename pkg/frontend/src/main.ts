// Dashboard wiring: one streaming subscription drives the view model, a
// slow poll keeps the channel traces fresh, and every number on screen is a
// value the API sent.

import { api, ApiError, openStream } from "./api.js";
import { drawRankHistory, drawTrace } from "./charts.js";
import {
  activeAlerts,
  applyAlert,
  applyAlertCleared,
  applyReport,
  applyTrace,
  backfill,
  emptyModel,
  fmt1,
  pushToast,
  validatePolicy,
  TRACE_HORIZON_S,
} from "./model.js";
import type { BaselineDoc, Policy } from "./types.js";

const vm = emptyModel();
let baselines: BaselineDoc[] = [];
let policy: Policy | null = null;
let policyErrors: Record<string, string> = {};

const $ = (id: string) => document.getElementById(id)!;

function connectionLabel(): string {
  return { connecting: "connecting…", live: "live", degraded: "reconnecting…" }[vm.connection];
}

function render(): void {
  const status = $("connection");
  status.textContent = connectionLabel();
  status.className = `pill ${vm.connection}`;
  $("watermark").textContent =
    vm.watermark === null ? "no data yet" : `data time ${fmt1(vm.watermark)} s`;

  renderAlerts();
  renderTraces();
  renderGauges();
  renderToasts();
}

function renderAlerts(): void {
  const host = $("alerts");
  host.innerHTML = "";
  const active = activeAlerts(vm);
  for (const alert of active) {
    const div = document.createElement("div");
    div.className = "banner alert";
    div.textContent =
      `ALERT ${alert.baseline_id}: rank ${fmt1(alert.rank_percent)}% — ` +
      `predicted event at ${fmt1(alert.predicted_event_time)} s ` +
      `(raised ${fmt1(alert.raised_at)} s)`;
    host.appendChild(div);
  }
  const recentCleared = vm.alerts.filter((a) => a.cleared_at !== null).slice(-2);
  for (const alert of recentCleared) {
    const div = document.createElement("div");
    div.className = "banner cleared";
    div.textContent = `cleared ${alert.baseline_id} at ${fmt1(alert.cleared_at)} s`;
    host.appendChild(div);
  }
}

function renderTraces(): void {
  const host = $("traces");
  for (const [channel, points] of Object.entries(vm.traces)) {
    let card = document.getElementById(`trace-${channel}`);
    if (!card) {
      card = document.createElement("div");
      card.id = `trace-${channel}`;
      card.className = "card";
      card.innerHTML = `<h3>${channel}</h3><canvas class="trace"></canvas>`;
      host.appendChild(card);
    }
    drawTrace(card.querySelector("canvas")!, points);
  }
}

function renderGauges(): void {
  const host = $("gauges");
  for (const b of baselines) {
    let card = document.getElementById(`gauge-${b.baseline_id}`);
    if (!card) {
      card = document.createElement("div");
      card.id = `gauge-${b.baseline_id}`;
      card.className = "card";
      card.innerHTML =
        `<h3>${b.baseline_id} <small>${b.label}</small>` +
        `<button class="rm" title="delete baseline">×</button></h3>` +
        `<div class="rank">–</div><canvas class="gauge"></canvas>`;
      card.querySelector("button.rm")!.addEventListener("click", async () => {
        await api.deleteBaseline(b.baseline_id);
        await refreshBaselines();
        card!.remove();
        render();
      });
      host.appendChild(card);
    }
    const rank = vm.latestRank[b.baseline_id];
    card.querySelector(".rank")!.textContent = rank === undefined ? "–" : `${fmt1(rank)}%`;
    drawRankHistory(
      card.querySelector("canvas")!,
      vm.rankHistory[b.baseline_id] ?? [],
      policy?.theta_on ?? 85,
      policy?.theta_off ?? 70,
    );
  }
}

function renderToasts(): void {
  const host = $("toasts");
  host.innerHTML = "";
  for (const message of vm.toasts.slice(-3)) {
    const div = document.createElement("div");
    div.className = "toast";
    div.textContent = message;
    host.appendChild(div);
  }
}

function renderPolicyForm(): void {
  if (!policy) return;
  (["theta_on", "theta_off", "min_consecutive"] as const).forEach((name) => {
    const input = $(`policy-${name}`) as HTMLInputElement;
    if (document.activeElement !== input) input.value = String(policy![name]);
    const errorHost = $(`error-${name}`);
    errorHost.textContent = policyErrors[name] ?? "";
  });
}

async function refreshBaselines(): Promise<void> {
  baselines = await api.baselines();
}

async function markPainEvent(): Promise<void> {
  const label = ($("event-label") as HTMLInputElement).value.trim() || "pain event";
  try {
    const status = await api.status();
    if (status.watermark === null) {
      pushToast(vm, "no data yet: cannot label an event");
      render();
      return;
    }
    const leadRaw = ($("event-lead") as HTMLInputElement).value.trim();
    const created = await api.markEvent(
      status.watermark,
      label,
      leadRaw === "" ? undefined : Number(leadRaw),
    );
    pushToast(vm, `baseline ${created.baseline_id} created`);
    await refreshBaselines();
  } catch (err) {
    if (err instanceof ApiError && err.status === 409) {
      pushToast(vm, `not enough history yet: ${err.message}`);
    } else {
      pushToast(vm, `baseline failed: ${String(err)}`);
    }
  }
  render();
}

async function submitPolicy(): Promise<void> {
  if (!policy) return;
  const candidate: Policy = {
    ...policy,
    theta_on: Number(($("policy-theta_on") as HTMLInputElement).value),
    theta_off: Number(($("policy-theta_off") as HTMLInputElement).value),
    min_consecutive: Number(($("policy-min_consecutive") as HTMLInputElement).value),
  };
  policyErrors = validatePolicy(candidate) as Record<string, string>;
  if (Object.keys(policyErrors).length > 0) {
    renderPolicyForm(); // rejected client-side, nothing sent
    return;
  }
  try {
    const updated = await api.putConfig({ policy: candidate });
    policy = updated.policy;
    policyErrors = {};
    pushToast(vm, "thresholds updated");
  } catch (err) {
    if (err instanceof ApiError && err.field) {
      policyErrors = { [err.field]: err.message };
    } else {
      pushToast(vm, `config update failed: ${String(err)}`);
    }
  }
  renderPolicyForm();
  render();
}

function liveUpdateLoop(): void {
  openStream({
    onReport: (r) => {
      applyReport(vm, r);
      render();
    },
    onAlert: (a) => {
      applyAlert(vm, a);
      render();
    },
    onAlertCleared: (a) => {
      applyAlertCleared(vm, a);
      render();
    },
    onOpen: () => {
      vm.connection = "live";
      void Promise.all([api.latest(), api.alerts(), refreshBaselines(), api.config()])
        .then(([latest, alerts, _refreshed, config]) => {
          backfill(vm, latest, alerts);
          policy = config.policy;
          renderPolicyForm();
          render();
        })
        .catch(() => undefined);
    },
    onDown: () => {
      vm.connection = "degraded";
      render();
    },
  });
}

async function pollTraces(): Promise<void> {
  try {
    const status = await api.status();
    const since = status.watermark === null ? 0 : status.watermark - TRACE_HORIZON_S;
    applyTrace(vm, await api.trace(since));
    render();
  } catch {
    /* degraded state already visible via the stream handler */
  }
}

async function boot(): Promise<void> {
  $("mark-event").addEventListener("click", () => void markPainEvent());
  $("policy-form").addEventListener("submit", (ev) => {
    ev.preventDefault();
    void submitPolicy();
  });
  try {
    const config = await api.config();
    policy = config.policy;
    renderPolicyForm();
    await refreshBaselines();
  } catch {
    pushToast(vm, "service unreachable");
  }
  liveUpdateLoop();
  void pollTraces();
  window.setInterval(() => void pollTraces(), 2000);
  render();
}

void boot();
