/** SVG backend: serializes figure geometry to a standalone SVG document. */

import { FigureGeometry, Point } from "./figure.js";

const LINE_COLOR = "#1565c0";
const BAND_COLOR = "#1565c0";
const GRID_COLOR = "#d0d0d0";
const TEXT_COLOR = "#222222";

function pts(points: Point[]): string {
  return points.map((p) => `${p.x.toFixed(2)},${p.y.toFixed(2)}`).join(" ");
}

export function renderSvg(geometry: FigureGeometry): string {
  const { width, height, plot } = geometry;
  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
      `viewBox="0 0 ${width} ${height}" font-family="Helvetica, Arial, sans-serif">`,
  );
  parts.push(`<rect width="${width}" height="${height}" fill="white"/>`);

  for (const tick of geometry.yTicks) {
    parts.push(
      `<line x1="${plot.x0}" y1="${tick.pos.toFixed(2)}" x2="${plot.x1}" ` +
        `y2="${tick.pos.toFixed(2)}" stroke="${GRID_COLOR}" stroke-width="1"/>`,
    );
    parts.push(
      `<text x="${plot.x0 - 8}" y="${(tick.pos + 4).toFixed(2)}" text-anchor="end" ` +
        `font-size="12" fill="${TEXT_COLOR}">${tick.label}</text>`,
    );
  }
  for (const tick of geometry.xTicks) {
    parts.push(
      `<line x1="${tick.pos.toFixed(2)}" y1="${plot.y1}" x2="${tick.pos.toFixed(2)}" ` +
        `y2="${plot.y1 + 5}" stroke="${TEXT_COLOR}" stroke-width="1"/>`,
    );
    parts.push(
      `<text x="${tick.pos.toFixed(2)}" y="${plot.y1 + 20}" text-anchor="middle" ` +
        `font-size="12" fill="${TEXT_COLOR}">${tick.label}</text>`,
    );
  }

  if (geometry.band.length > 0) {
    parts.push(
      `<polygon points="${pts(geometry.band)}" fill="${BAND_COLOR}" ` +
        `fill-opacity="0.18" stroke="none"/>`,
    );
  }
  parts.push(
    `<polyline points="${pts(geometry.line)}" fill="none" stroke="${LINE_COLOR}" ` +
      `stroke-width="2"/>`,
  );
  for (const p of geometry.line) {
    parts.push(
      `<circle cx="${p.x.toFixed(2)}" cy="${p.y.toFixed(2)}" r="3.2" fill="${LINE_COLOR}"/>`,
    );
  }

  parts.push(
    `<rect x="${plot.x0}" y="${plot.y0}" width="${plot.x1 - plot.x0}" ` +
      `height="${plot.y1 - plot.y0}" fill="none" stroke="${TEXT_COLOR}" stroke-width="1"/>`,
  );
  parts.push(
    `<text x="${(plot.x0 + plot.x1) / 2}" y="${plot.y1 + 42}" text-anchor="middle" ` +
      `font-size="14" fill="${TEXT_COLOR}">${geometry.xLabel}</text>`,
  );
  parts.push(
    `<text x="20" y="${(plot.y0 + plot.y1) / 2}" text-anchor="middle" font-size="14" ` +
      `fill="${TEXT_COLOR}" transform="rotate(-90 20 ${(plot.y0 + plot.y1) / 2})">` +
      `${geometry.yLabel}</text>`,
  );
  parts.push(
    `<text x="${(plot.x0 + plot.x1) / 2}" y="24" text-anchor="middle" ` +
      `font-size="16" fill="${TEXT_COLOR}">${geometry.title}</text>`,
  );
  parts.push("</svg>");
  return parts.join("\n") + "\n";
}
