/** DOM layer: builds the panels out of the state object every tick.
 *
 * Slider positions are written only on row creation and on programmatic
 * changes (equalize rest, copy active, an accepted submission); the 1 Hz
 * refresh never fights a drag in progress.
 */

import { buildChart, colorFor, type ChartSeries } from "./chart.js";
import { submittable } from "./mixing.js";
import type { DashboardState } from "./store.js";

export interface Handlers {
  onSlider(code: string, value: number): void;
  onEqualize(code: string): void;
  onLoadActive(): void;
  onSubmit(): void;
  onPause(): void;
  onResume(): void;
  onCheckpoint(): void;
}

interface SliderRow {
  input: HTMLInputElement;
  pendingVal: HTMLElement;
  activeVal: HTMLElement;
  restBtn: HTMLButtonElement;
}

const LOG_LIMIT = 50;

let handlers: Handlers;
const rows = new Map<string, SliderRow>();

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element: ${id}`);
  return node as T;
}

export function initView(h: Handlers): void {
  handlers = h;
  el<HTMLButtonElement>("submit-mixing").addEventListener("click", () => handlers.onSubmit());
  el<HTMLButtonElement>("load-active").addEventListener("click", () => handlers.onLoadActive());
  el<HTMLButtonElement>("pause").addEventListener("click", () => handlers.onPause());
  el<HTMLButtonElement>("resume").addEventListener("click", () => handlers.onResume());
  el<HTMLButtonElement>("checkpoint").addEventListener("click", () => handlers.onCheckpoint());
}

export function setSliderPositions(pending: Record<string, number>): void {
  for (const [code, value] of Object.entries(pending)) {
    const row = rows.get(code);
    if (row) row.input.value = String(value);
  }
}

export function render(store: DashboardState, now: number): void {
  renderBadges(store, now);
  renderStats(store);
  renderChart(store);
  renderSliders(store, now);
  renderLog(store);
  el("notice").textContent = store.notice ?? "";
}

function renderBadges(store: DashboardState, now: number): void {
  const conn = store.connection(now);
  const connBadge = el("conn-badge");
  connBadge.className = `badge conn-${conn}`;
  connBadge.textContent =
    conn === "stale" && store.lastSnapshotAt !== null
      ? `stale: no snapshot for ${Math.round((now - store.lastSnapshotAt) / 1000)}s`
      : conn;
  connBadge.title = store.lastPollError ?? "";

  const state = store.state();
  const stateBadge = el("state-badge");
  stateBadge.className = `badge state-${state ?? "unknown"}`;
  stateBadge.textContent = state ?? "no data";

  const error = store.latest?.error;
  el("error-line").textContent = state === "diverged" && error ? error : "";
}

function renderStats(store: DashboardState): void {
  const snap = store.latest;
  const parts = [`step ${store.renderedStep}`];
  if (snap) {
    if (snap.lr !== null) parts.push(`lr ${snap.lr.toExponential(2)}`);
    if (snap.loss !== null) parts.push(`loss ${snap.loss.toFixed(3)}`);
    if (snap.throughput > 0) parts.push(`${snap.throughput.toFixed(1)} utt/s`);
  }
  el("run-stats").textContent = parts.join("   ");
}

function renderChart(store: DashboardState): void {
  const codes = store.history.languages();
  const series: ChartSeries[] = codes.map((code, i) => ({
    label: code,
    color: colorFor(i),
    points: store.history.series(code),
  }));
  series.push({
    label: "average",
    color: "#707070",
    dashed: true,
    points: store.history.averageSeries(),
  });
  const layout = buildChart(series);

  const svg = el<HTMLElement>("chart");
  svg.setAttribute("viewBox", `0 0 ${layout.width} ${layout.height}`);
  const { width, height, pad } = layout;
  const marks: string[] = [
    `<line class="axis" x1="${pad}" y1="${height - pad}" x2="${width - pad}" y2="${height - pad}"/>`,
    `<line class="axis" x1="${pad}" y1="${pad}" x2="${pad}" y2="${height - pad}"/>`,
  ];
  for (const t of layout.xTicks) {
    marks.push(`<text class="tick" x="${t.x}" y="${height - pad + 14}" text-anchor="middle">${esc(t.label)}</text>`);
  }
  for (const t of layout.yTicks) {
    marks.push(`<text class="tick" x="${pad - 5}" y="${t.y + 3}" text-anchor="end">${esc(t.label)}</text>`);
  }
  for (const p of layout.paths) {
    const dash = p.dashed ? ' stroke-dasharray="5 4"' : "";
    marks.push(`<path d="${p.d}" fill="none" stroke="${p.color}" stroke-width="1.5"${dash}/>`);
  }
  svg.innerHTML = marks.join("");

  const legend = el("legend");
  const latestByCode = store.latest?.per_language_loss ?? {};
  const items = series.map((s) => {
    const tail = s.points[s.points.length - 1];
    const latest = s.label === "average" ? tail?.value : (latestByCode[s.label] ?? tail?.value);
    const value = latest === undefined ? "" : ` ${latest.toFixed(3)}`;
    return `<span class="legend-item"><span class="swatch" style="background:${s.color}"></span>${esc(s.label)}${value}</span>`;
  });
  legend.innerHTML = items.join("");
}

function renderSliders(store: DashboardState, now: number): void {
  const container = el("sliders");
  const pending = store.pending;
  if (!pending) {
    container.textContent = "waiting for the first snapshot";
    rows.clear();
    return;
  }
  const codes = Object.keys(pending).sort();
  if (codes.join("\n") !== [...rows.keys()].join("\n")) {
    buildSliderRows(container, codes, pending);
  }

  const enabled = store.controlsEnabled(now);
  const total = Object.values(pending).reduce((a, b) => a + b, 0);
  const active = store.latest?.mixing ?? {};
  for (const code of codes) {
    const row = rows.get(code);
    if (!row) continue;
    const value = pending[code] ?? 0;
    row.pendingVal.textContent = total > 0 ? `${((value / total) * 100).toFixed(1)}%` : "-";
    const activeShare = active[code];
    row.activeVal.textContent = activeShare === undefined ? "" : `${(activeShare * 100).toFixed(1)}%`;
    row.input.disabled = !enabled;
    row.restBtn.disabled = !enabled;
  }

  el<HTMLButtonElement>("submit-mixing").disabled = !enabled || !submittable(pending);
  el<HTMLButtonElement>("load-active").disabled = !enabled;

  const state = store.state();
  el<HTMLButtonElement>("pause").disabled = !enabled || state !== "running";
  el<HTMLButtonElement>("resume").disabled = !enabled || state !== "paused";
  el<HTMLButtonElement>("checkpoint").disabled = !enabled;
}

function buildSliderRows(
  container: HTMLElement,
  codes: string[],
  pending: Record<string, number>,
): void {
  container.textContent = "";
  rows.clear();
  for (const code of codes) {
    const row = document.createElement("div");
    row.className = "slider-row";

    const name = document.createElement("span");
    name.className = "code";
    name.textContent = code;

    const activeVal = document.createElement("span");
    activeVal.className = "active-val";
    activeVal.title = "share in the running schedule";

    const input = document.createElement("input");
    input.type = "range";
    input.min = "0";
    input.max = "1";
    input.step = "0.01";
    input.value = String(pending[code] ?? 0);
    input.addEventListener("input", () => handlers.onSlider(code, Number(input.value)));

    const pendingVal = document.createElement("span");
    pendingVal.className = "pending-val";
    pendingVal.title = "share after normalization, as it would be submitted";

    const restBtn = document.createElement("button");
    restBtn.textContent = "equalize rest";
    restBtn.title = "keep this language's value, split the remainder evenly";
    restBtn.addEventListener("click", () => handlers.onEqualize(code));

    row.append(name, activeVal, input, pendingVal, restBtn);
    container.append(row);
    rows.set(code, { input, pendingVal, activeVal, restBtn });
  }
}

function renderLog(store: DashboardState): void {
  const list = el("sub-log");
  const entries = store.log.slice(-LOG_LIMIT).reverse();
  list.innerHTML = entries
    .map((entry) => {
      const weights = Object.entries(entry.weights)
        .map(([code, w]) => `${esc(code)} ${w.toFixed(2)}`)
        .join(", ");
      const when = new Date(entry.at).toLocaleTimeString();
      return `<li>${when}  effective step ${entry.effective_step}: ${weights}</li>`;
    })
    .join("");
}

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}
