/**
 * Diversity chart geometry.  Pure coordinate math lives here so it can be
 * unit-tested; main.ts only strokes the returned polylines onto a canvas.
 */

import type { MetricsPoint } from "./state.js";

export interface ChartLayout {
  width: number;
  height: number;
  padLeft: number;
  padRight: number;
  padTop: number;
  padBottom: number;
}

export const DEFAULT_LAYOUT: ChartLayout = {
  width: 640,
  height: 240,
  padLeft: 42,
  padRight: 8,
  padTop: 8,
  padBottom: 22,
};

export interface Point {
  x: number;
  y: number;
}

export interface ChartModel {
  global: Point[];
  constrained: Point[];
  /** y-axis tick values (diversity counts) and their pixel positions. */
  ticks: { value: number; y: number }[];
  xMax: number;
  yMax: number;
}

/** Round v up to 1/2/5 x 10^k, the usual nice axis bound. */
export function niceCeil(v: number): number {
  if (v <= 0) return 1;
  const mag = Math.pow(10, Math.floor(Math.log10(v)));
  for (const m of [1, 2, 5, 10]) {
    if (v <= m * mag) return m * mag;
  }
  return 10 * mag;
}

function scale(
  series: number[],
  xMax: number,
  yMax: number,
  layout: ChartLayout,
): Point[] {
  const w = layout.width - layout.padLeft - layout.padRight;
  const h = layout.height - layout.padTop - layout.padBottom;
  return series.map((value, i) => ({
    x: layout.padLeft + (xMax <= 1 ? 0 : (i / (xMax - 1)) * w),
    y: layout.padTop + h - (value / yMax) * h,
  }));
}

/**
 * Lays out both diversity series over a shared y scale.  The x axis spans
 * max(points, budget) samples so a live chart grows toward a fixed right
 * edge instead of rescaling on every event.
 */
export function chartModel(
  metrics: MetricsPoint[],
  budget: number,
  layout: ChartLayout = DEFAULT_LAYOUT,
): ChartModel {
  const global = metrics.map((m) => m.global_div);
  const constrained = metrics.map((m) => m.constrained_div);
  const xMax = Math.max(budget, metrics.length);
  const yMax = niceCeil(Math.max(1, ...global));
  const h = layout.height - layout.padTop - layout.padBottom;
  const nTicks = 4;
  const ticks = Array.from({ length: nTicks + 1 }, (_, i) => {
    const value = (yMax / nTicks) * i;
    return { value, y: layout.padTop + h - (value / yMax) * h };
  });
  return {
    global: scale(global, xMax, yMax, layout),
    constrained: scale(constrained, xMax, yMax, layout),
    ticks,
    xMax,
    yMax,
  };
}
