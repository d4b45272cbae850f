/** Pure chart geometry: series in, SVG path strings and tick marks out. */

import { downsample } from "./downsample.js";
import type { SeriesPoint } from "./history.js";

export interface ChartSeries {
  label: string;
  color: string;
  dashed?: boolean;
  points: SeriesPoint[];
}

export interface ChartPath {
  label: string;
  color: string;
  dashed: boolean;
  d: string;
}

export interface ChartLayout {
  width: number;
  height: number;
  pad: number;
  paths: ChartPath[];
  xTicks: { x: number; label: string }[];
  yTicks: { y: number; label: string }[];
}

export const PALETTE = [
  "#4e79a7",
  "#f28e2b",
  "#e15759",
  "#76b7b2",
  "#59a14f",
  "#edc948",
  "#b07aa1",
  "#ff9da7",
  "#9c755f",
  "#bab0ac",
];

export function colorFor(index: number): string {
  return PALETTE[index % PALETTE.length] as string;
}

export function buildChart(
  series: readonly ChartSeries[],
  width = 720,
  height = 260,
  pad = 34,
): ChartLayout {
  const layout: ChartLayout = { width, height, pad, paths: [], xTicks: [], yTicks: [] };
  const drawn = series.filter((s) => s.points.length > 0);
  if (drawn.length === 0) return layout;

  let xMin = Infinity;
  let xMax = -Infinity;
  let yMin = Infinity;
  let yMax = -Infinity;
  for (const s of drawn) {
    for (const p of s.points) {
      if (p.step < xMin) xMin = p.step;
      if (p.step > xMax) xMax = p.step;
      if (p.value < yMin) yMin = p.value;
      if (p.value > yMax) yMax = p.value;
    }
  }
  // Degenerate ranges (single step, or a flat curve) still need a nonzero
  // span so every coordinate stays finite.
  if (xMax === xMin) {
    xMin -= 1;
    xMax += 1;
  }
  if (yMax === yMin) {
    yMin -= 0.5;
    yMax += 0.5;
  }

  const sx = (step: number) => pad + ((step - xMin) / (xMax - xMin)) * (width - 2 * pad);
  const sy = (value: number) => height - pad - ((value - yMin) / (yMax - yMin)) * (height - 2 * pad);

  for (const s of drawn) {
    const pts = downsample(s.points);
    const parts: string[] = [];
    for (let i = 0; i < pts.length; i++) {
      const p = pts[i] as SeriesPoint;
      parts.push(`${i === 0 ? "M" : "L"}${sx(p.step).toFixed(1)} ${sy(p.value).toFixed(1)}`);
    }
    layout.paths.push({
      label: s.label,
      color: s.color,
      dashed: s.dashed === true,
      d: parts.join(" "),
    });
  }

  const ticks = 4;
  for (let i = 0; i <= ticks; i++) {
    const step = xMin + ((xMax - xMin) * i) / ticks;
    const value = yMin + ((yMax - yMin) * i) / ticks;
    layout.xTicks.push({ x: sx(step), label: String(Math.round(step)) });
    layout.yTicks.push({ y: sy(value), label: formatValue(value) });
  }
  return layout;
}

function formatValue(v: number): string {
  const a = Math.abs(v);
  if (a >= 100) return v.toFixed(0);
  if (a >= 1) return v.toFixed(2);
  return v.toPrecision(2);
}
