/**
 * File-level rendering: read a sweep CSV, build the figure geometry, write
 * the image. Output format follows the file extension (.svg or .png).
 */

import { readFileSync, writeFileSync } from "node:fs";
import { extname } from "node:path";

import { CsvError, parseSweepCsv } from "./csv.js";
import { buildFigure, FigureSpec } from "./figure.js";
import { renderPng } from "./raster.js";
import { renderSvg } from "./svg.js";

export function render(spec: FigureSpec): void {
  const text = readFileSync(spec.input, "utf8");
  const table = parseSweepCsv(text);
  const geometry = buildFigure(table, spec);
  const ext = extname(spec.output).toLowerCase();
  if (ext === ".svg") {
    writeFileSync(spec.output, renderSvg(geometry));
  } else if (ext === ".png") {
    writeFileSync(spec.output, renderPng(geometry));
  } else {
    throw new CsvError(`unsupported output extension '${ext}' (use .svg or .png)`);
  }
}
