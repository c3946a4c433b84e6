#!/usr/bin/env node
/**
 * Command line: `plot --in sweep.csv --x horizon --out fig7.png`
 * Options: --title <text>, --no-band (skip the ci95 shading).
 */

import { parseArgs } from "node:util";

import { CsvError } from "./csv.js";
import { render } from "./render.js";

const USAGE =
  "usage: nemcharge-plot plot --in <sweep.csv> --x <horizon|price-gap> " +
  "--out <figure.svg|figure.png> [--title <text>] [--no-band]";

export function run(argv: string[]): number {
  if (argv[0] !== "plot") {
    console.error(USAGE);
    return 64;
  }
  let parsed;
  try {
    parsed = parseArgs({
      args: argv.slice(1),
      options: {
        in: { type: "string" },
        x: { type: "string" },
        out: { type: "string" },
        title: { type: "string" },
        "no-band": { type: "boolean", default: false },
      },
    });
  } catch (error) {
    console.error(`${(error as Error).message}\n${USAGE}`);
    return 64;
  }
  const { values } = parsed;
  if (!values.in || !values.x || !values.out) {
    console.error(USAGE);
    return 64;
  }
  try {
    render({
      input: values.in,
      xParam: values.x,
      output: values.out,
      title: values.title,
      band: !values["no-band"],
    });
  } catch (error) {
    if (error instanceof CsvError) {
      console.error(`error: ${error.message}`);
      return 1;
    }
    if ((error as NodeJS.ErrnoException).code === "ENOENT") {
      console.error(`error: cannot read ${values.in}`);
      return 1;
    }
    throw error;
  }
  console.error(`wrote ${values.out}`);
  return 0;
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url === new URL(`file://${process.argv[1]}`).href;
if (invokedDirectly) {
  process.exit(run(process.argv.slice(2)));
}
