/**
 * Sweep-CSV parsing. The solver emits
 * `param,value,mean_opt,mean_base,gap_pct,ci95_lo,ci95_hi`; this module only
 * reads the file back, never recomputes any simulation quantity.
 */

export interface SweepRow {
  param: string;
  values: Record<string, number>;
}

export interface SweepTable {
  header: string[];
  rows: SweepRow[];
}

export class CsvError extends Error {}

export function parseSweepCsv(text: string): SweepTable {
  const lines = text
    .split(/\r?\n/)
    .map((line) => line.trim())
    .filter((line) => line.length > 0);
  if (lines.length === 0) {
    throw new CsvError("no data rows: file is empty");
  }
  const header = lines[0].split(",").map((h) => h.trim());
  if (!header.includes("param")) {
    throw new CsvError("missing column: param");
  }
  const rows: SweepRow[] = [];
  for (const [index, line] of lines.slice(1).entries()) {
    const cells = line.split(",");
    if (cells.length !== header.length) {
      throw new CsvError(
        `row ${index + 1} has ${cells.length} cells, expected ${header.length}`,
      );
    }
    const values: Record<string, number> = {};
    let param = "";
    for (let c = 0; c < header.length; c++) {
      if (header[c] === "param") {
        param = cells[c].trim();
      } else {
        const parsed = Number(cells[c]);
        if (!Number.isFinite(parsed)) {
          throw new CsvError(`row ${index + 1}: cannot parse ${header[c]}=${cells[c]}`);
        }
        values[header[c]] = parsed;
      }
    }
    rows.push({ param, values });
  }
  if (rows.length === 0) {
    throw new CsvError("no data rows");
  }
  return { header, rows };
}

/** Columns the figure reads; names the first one absent from the header. */
export function requireColumns(table: SweepTable, columns: string[]): void {
  for (const column of columns) {
    if (!table.header.includes(column)) {
      throw new CsvError(`missing column: ${column}`);
    }
  }
}
