#!/usr/bin/env node
import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { FIGURE_KINDS, FigureKind, render } from "./render.js";

const argv = yargs(hideBin(process.argv))
  .usage("msjsim-plot --input sweep.csv --kind ratio_vs_load --output fig.svg")
  .option("input", {
    type: "string",
    demandOption: true,
    describe: "input CSV (sweep CSV, or rank CSV for rank_curves)",
  })
  .option("kind", {
    type: "string",
    choices: FIGURE_KINDS,
    demandOption: true,
    describe: "figure kind",
  })
  .option("output", {
    type: "string",
    demandOption: true,
    describe: "output SVG path",
  })
  .strict()
  .parseSync();

try {
  render({
    input: argv.input,
    kind: argv.kind as FigureKind,
    output: argv.output,
  });
  console.log(`wrote ${argv.output}`);
} catch (err) {
  console.error(`error: ${err instanceof Error ? err.message : String(err)}`);
  process.exit(1);
}
