/**
 * Raster backend: draws figure geometry onto an RGBA buffer (lines via
 * Bresenham, the confidence band via even-odd scanline fill, labels with
 * the built-in 5x7 font) and encodes PNG bytes with pngjs.
 */

import { PNG } from "pngjs";

import { FigureGeometry, Point } from "./figure.js";
import { GLYPH_HEIGHT, GLYPH_WIDTH, glyphFor } from "./font5x7.js";

type Rgb = [number, number, number];

const LINE: Rgb = [21, 101, 192];
const BAND: Rgb = [200, 219, 242];
const GRID: Rgb = [208, 208, 208];
const TEXT: Rgb = [34, 34, 34];

class Canvas {
  readonly png: PNG;

  constructor(readonly width: number, readonly height: number) {
    this.png = new PNG({ width, height });
    this.png.data.fill(255);
  }

  set(x: number, y: number, [r, g, b]: Rgb): void {
    const xi = Math.round(x);
    const yi = Math.round(y);
    if (xi < 0 || yi < 0 || xi >= this.width || yi >= this.height) {
      return;
    }
    const at = (this.width * yi + xi) << 2;
    this.png.data[at] = r;
    this.png.data[at + 1] = g;
    this.png.data[at + 2] = b;
    this.png.data[at + 3] = 255;
  }

  line(x0: number, y0: number, x1: number, y1: number, color: Rgb, thick = 1): void {
    let xa = Math.round(x0);
    let ya = Math.round(y0);
    const xb = Math.round(x1);
    const yb = Math.round(y1);
    const dx = Math.abs(xb - xa);
    const dy = -Math.abs(yb - ya);
    const sx = xa < xb ? 1 : -1;
    const sy = ya < yb ? 1 : -1;
    let err = dx + dy;
    for (;;) {
      for (let ox = 0; ox < thick; ox++) {
        for (let oy = 0; oy < thick; oy++) {
          this.set(xa + ox, ya + oy, color);
        }
      }
      if (xa === xb && ya === yb) {
        break;
      }
      const e2 = 2 * err;
      if (e2 >= dy) {
        err += dy;
        xa += sx;
      }
      if (e2 <= dx) {
        err += dx;
        ya += sy;
      }
    }
  }

  fillPolygon(points: Point[], color: Rgb): void {
    if (points.length < 3) {
      return;
    }
    const ys = points.map((p) => p.y);
    const yMin = Math.max(0, Math.floor(Math.min(...ys)));
    const yMax = Math.min(this.height - 1, Math.ceil(Math.max(...ys)));
    for (let y = yMin; y <= yMax; y++) {
      const crossings: number[] = [];
      for (let i = 0; i < points.length; i++) {
        const a = points[i];
        const b = points[(i + 1) % points.length];
        if ((a.y <= y && b.y > y) || (b.y <= y && a.y > y)) {
          crossings.push(a.x + ((y - a.y) / (b.y - a.y)) * (b.x - a.x));
        }
      }
      crossings.sort((u, v) => u - v);
      for (let i = 0; i + 1 < crossings.length; i += 2) {
        const from = Math.max(0, Math.round(crossings[i]));
        const to = Math.min(this.width - 1, Math.round(crossings[i + 1]));
        for (let x = from; x <= to; x++) {
          this.set(x, y, color);
        }
      }
    }
  }

  disc(cx: number, cy: number, radius: number, color: Rgb): void {
    for (let y = -radius; y <= radius; y++) {
      for (let x = -radius; x <= radius; x++) {
        if (x * x + y * y <= radius * radius) {
          this.set(cx + x, cy + y, color);
        }
      }
    }
  }

  text(message: string, x: number, y: number, color: Rgb,
       anchor: "start" | "middle" | "end" = "start", rotate90 = false): void {
    const width = message.length * (GLYPH_WIDTH + 1);
    let offset = 0;
    if (anchor === "middle") {
      offset = -width / 2;
    } else if (anchor === "end") {
      offset = -width;
    }
    for (let i = 0; i < message.length; i++) {
      const glyph = glyphFor(message[i]);
      for (let row = 0; row < GLYPH_HEIGHT; row++) {
        for (let col = 0; col < GLYPH_WIDTH; col++) {
          if ((glyph[row] >> (GLYPH_WIDTH - 1 - col)) & 1) {
            const gx = offset + i * (GLYPH_WIDTH + 1) + col;
            const gy = row - GLYPH_HEIGHT / 2;
            if (rotate90) {
              this.set(x + gy, y - gx, color);
            } else {
              this.set(x + gx, y + gy, color);
            }
          }
        }
      }
    }
  }
}

export function renderPng(geometry: FigureGeometry): Buffer {
  const { plot } = geometry;
  const canvas = new Canvas(geometry.width, geometry.height);

  for (const tick of geometry.yTicks) {
    canvas.line(plot.x0, tick.pos, plot.x1, tick.pos, GRID);
    canvas.text(tick.label, plot.x0 - 8, tick.pos, TEXT, "end");
  }
  for (const tick of geometry.xTicks) {
    canvas.line(tick.pos, plot.y1, tick.pos, plot.y1 + 5, TEXT);
    canvas.text(tick.label, tick.pos, plot.y1 + 14, TEXT, "middle");
  }

  if (geometry.band.length > 0) {
    canvas.fillPolygon(geometry.band, BAND);
  }
  for (let i = 0; i + 1 < geometry.line.length; i++) {
    const a = geometry.line[i];
    const b = geometry.line[i + 1];
    canvas.line(a.x, a.y, b.x, b.y, LINE, 2);
  }
  for (const p of geometry.line) {
    canvas.disc(p.x, p.y, 3, LINE);
  }

  canvas.line(plot.x0, plot.y0, plot.x1, plot.y0, TEXT);
  canvas.line(plot.x0, plot.y1, plot.x1, plot.y1, TEXT);
  canvas.line(plot.x0, plot.y0, plot.x0, plot.y1, TEXT);
  canvas.line(plot.x1, plot.y0, plot.x1, plot.y1, TEXT);

  canvas.text(geometry.xLabel, (plot.x0 + plot.x1) / 2, plot.y1 + 36, TEXT, "middle");
  canvas.text(geometry.yLabel, 20, (plot.y0 + plot.y1) / 2, TEXT, "middle", true);
  canvas.text(geometry.title, (plot.x0 + plot.x1) / 2, 20, TEXT, "middle");

  return PNG.sync.write(canvas.png);
}
