/**
 * Pure chart geometry: maps sweep rows onto pixel coordinates for one
 * line-with-band figure. Deterministic given the parsed rows; rendering
 * backends (SVG, raster) draw exactly what this module computes.
 */

import { CsvError, requireColumns, SweepTable } from "./csv.js";

export interface FigureSpec {
  input: string;
  xParam: string; // swept parameter name, e.g. "horizon" or "price-gap"
  output: string;
  title?: string;
  band: boolean; // ci95 shading
}

export interface Point {
  x: number;
  y: number;
}

export interface Tick {
  pos: number; // pixel coordinate along the axis
  label: string;
}

export interface FigureGeometry {
  width: number;
  height: number;
  plot: { x0: number; y0: number; x1: number; y1: number };
  line: Point[];
  band: Point[]; // closed polygon (upper path then reversed lower), empty if disabled
  xTicks: Tick[];
  yTicks: Tick[];
  xLabel: string;
  yLabel: string;
  title: string;
}

export const WIDTH = 720;
export const HEIGHT = 480;
const MARGIN = { left: 72, right: 24, top: 40, bottom: 56 };

function niceTicks(lo: number, hi: number, target = 6): number[] {
  if (!(hi > lo)) {
    return [lo];
  }
  const raw = (hi - lo) / target;
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  const step = [1, 2, 2.5, 5, 10].map((m) => m * mag).find((s) => (hi - lo) / s <= target)!;
  const first = Math.ceil(lo / step) * step;
  const ticks: number[] = [];
  for (let v = first; v <= hi + 1e-9; v += step) {
    ticks.push(Math.round(v / step) * step);
  }
  return ticks;
}

function fmt(v: number): string {
  const rounded = Math.round(v * 1e6) / 1e6;
  return String(rounded);
}

export function buildFigure(table: SweepTable, spec: FigureSpec): FigureGeometry {
  const needed = ["value", "gap_pct"];
  if (spec.band) {
    needed.push("ci95_lo", "ci95_hi");
  }
  requireColumns(table, needed);
  const rows = table.rows
    .filter((r) => r.param === spec.xParam)
    .slice()
    .sort((a, b) => a.values.value - b.values.value);
  if (rows.length === 0) {
    throw new CsvError(`no data rows for param '${spec.xParam}'`);
  }

  const xs = rows.map((r) => r.values.value);
  const ys = rows.map((r) => r.values.gap_pct);
  const los = spec.band ? rows.map((r) => r.values.ci95_lo) : ys;
  const his = spec.band ? rows.map((r) => r.values.ci95_hi) : ys;

  const xLo = Math.min(...xs);
  const xHi = Math.max(...xs);
  let yLo = Math.min(0, ...los);
  let yHi = Math.max(...his);
  const pad = (yHi - yLo || 1) * 0.08;
  yHi += pad;

  const plot = {
    x0: MARGIN.left,
    y0: MARGIN.top,
    x1: WIDTH - MARGIN.right,
    y1: HEIGHT - MARGIN.bottom,
  };
  const sx = (v: number) =>
    xHi === xLo
      ? (plot.x0 + plot.x1) / 2
      : plot.x0 + ((v - xLo) / (xHi - xLo)) * (plot.x1 - plot.x0);
  const sy = (v: number) => plot.y1 - ((v - yLo) / (yHi - yLo)) * (plot.y1 - plot.y0);

  const line = xs.map((x, i) => ({ x: sx(x), y: sy(ys[i]) }));
  const band: Point[] = [];
  if (spec.band) {
    for (let i = 0; i < xs.length; i++) {
      band.push({ x: sx(xs[i]), y: sy(his[i]) });
    }
    for (let i = xs.length - 1; i >= 0; i--) {
      band.push({ x: sx(xs[i]), y: sy(los[i]) });
    }
  }

  const xLabel = spec.xParam === "price-gap"
    ? "retail minus sell rate ($/kWh)"
    : `${spec.xParam} (hours)`;
  return {
    width: WIDTH,
    height: HEIGHT,
    plot,
    line,
    band,
    xTicks: niceTicks(xLo, xHi).map((v) => ({ pos: sx(v), label: fmt(v) })),
    yTicks: niceTicks(yLo, yHi).map((v) => ({ pos: sy(v), label: fmt(v) })),
    xLabel,
    yLabel: "surplus gap vs baseline (%)",
    title: spec.title ?? `surplus gap vs ${spec.xParam}`,
  };
}
