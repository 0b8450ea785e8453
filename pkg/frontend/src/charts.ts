// Minimal canvas renderers: channel trace sparklines and rank gauge history.

import { fmt1, type RankPoint, type TracePoint } from "./model.js";

const TRACE_COLOR = "#4ea1d3";
const GRID_COLOR = "#2a2f3a";
const TEXT_COLOR = "#9aa4b2";

function prepare(canvas: HTMLCanvasElement): CanvasRenderingContext2D {
  const dpr = window.devicePixelRatio || 1;
  const { clientWidth, clientHeight } = canvas;
  canvas.width = clientWidth * dpr;
  canvas.height = clientHeight * dpr;
  const ctx = canvas.getContext("2d")!;
  ctx.scale(dpr, dpr);
  ctx.clearRect(0, 0, clientWidth, clientHeight);
  return ctx;
}

export function drawTrace(canvas: HTMLCanvasElement, points: TracePoint[]): void {
  const ctx = prepare(canvas);
  const w = canvas.clientWidth;
  const h = canvas.clientHeight;
  if (points.length < 2) {
    ctx.fillStyle = TEXT_COLOR;
    ctx.fillText("waiting for data", 8, h / 2);
    return;
  }
  let lo = Infinity;
  let hi = -Infinity;
  for (const p of points) {
    lo = Math.min(lo, p.v);
    hi = Math.max(hi, p.v);
  }
  if (hi - lo < 1e-9) {
    lo -= 0.5;
    hi += 0.5;
  }
  const t0 = points[0].t;
  const t1 = points[points.length - 1].t;
  const x = (t: number) => ((t - t0) / (t1 - t0)) * (w - 44) + 2;
  const y = (v: number) => h - 4 - ((v - lo) / (hi - lo)) * (h - 8);

  ctx.strokeStyle = TRACE_COLOR;
  ctx.lineWidth = 1;
  ctx.beginPath();
  points.forEach((p, i) => (i === 0 ? ctx.moveTo(x(p.t), y(p.v)) : ctx.lineTo(x(p.t), y(p.v))));
  ctx.stroke();

  ctx.fillStyle = TEXT_COLOR;
  ctx.font = "10px sans-serif";
  ctx.fillText(fmt1(hi), w - 40, 10);
  ctx.fillText(fmt1(lo), w - 40, h - 2);
  ctx.fillText(fmt1(points[points.length - 1].v), w - 40, h / 2);
}

export function drawRankHistory(
  canvas: HTMLCanvasElement,
  points: RankPoint[],
  thetaOn: number,
  thetaOff: number,
): void {
  const ctx = prepare(canvas);
  const w = canvas.clientWidth;
  const h = canvas.clientHeight;
  const y = (pct: number) => h - 3 - (pct / 100) * (h - 6);

  for (const [value, color] of [
    [thetaOn, "#d9534f"],
    [thetaOff, "#5cb85c"],
  ] as const) {
    ctx.strokeStyle = color;
    ctx.setLineDash([4, 3]);
    ctx.beginPath();
    ctx.moveTo(0, y(value));
    ctx.lineTo(w, y(value));
    ctx.stroke();
    ctx.setLineDash([]);
  }
  ctx.strokeStyle = GRID_COLOR;
  ctx.strokeRect(0.5, 0.5, w - 1, h - 1);
  if (points.length === 0) return;

  const t0 = points[0].t;
  const t1 = Math.max(points[points.length - 1].t, t0 + 1);
  const x = (t: number) => ((t - t0) / (t1 - t0)) * (w - 8) + 4;

  ctx.strokeStyle = "#f0ad4e";
  ctx.lineWidth = 1.5;
  ctx.beginPath();
  points.forEach((p, i) =>
    i === 0 ? ctx.moveTo(x(p.t), y(p.percent)) : ctx.lineTo(x(p.t), y(p.percent)),
  );
  ctx.stroke();
}
