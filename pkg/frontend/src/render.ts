import { readFileSync, writeFileSync } from "fs";

import { CsvError, parseRankCsv, parseSweepCsv } from "./csv.js";
import { policySeries, rankSeries } from "./series.js";
import { chart } from "./svg.js";

export type FigureKind = "mean_vs_load" | "ratio_vs_load" | "rank_curves";

export const FIGURE_KINDS: FigureKind[] = [
  "mean_vs_load",
  "ratio_vs_load",
  "rank_curves",
];

export interface PlotSpec {
  input: string;
  kind: FigureKind;
  output: string;
}

/** Pure CSV-text-to-SVG-text rendering; throws CsvError on bad input. */
export function renderText(kind: FigureKind, csvText: string): string {
  switch (kind) {
    case "mean_vs_load": {
      const series = policySeries(parseSweepCsv(csvText), "meanT");
      if (series.length === 0) {
        throw new CsvError("no stable rows with mean_T to plot");
      }
      return chart(series, {
        title: "Mean response time vs load",
        xLabel: "load",
        yLabel: "mean response time",
        logY: true,
      });
    }
    case "ratio_vs_load": {
      const series = policySeries(parseSweepCsv(csvText), "ratioT");
      if (series.length === 0) {
        throw new CsvError("no stable rows with ratio_T to plot");
      }
      return chart(series, {
        title: "Response time ratio to pooled SRPT vs load",
        xLabel: "load",
        yLabel: "mean response time ratio",
        refLineY: 1,
      });
    }
    case "rank_curves":
      return chart(rankSeries(parseRankCsv(csvText)), {
        title: "Gittins rank by job age",
        xLabel: "age",
        yLabel: "rank",
      });
    default:
      throw new CsvError(`unknown figure kind: ${kind as string}`);
  }
}

/**
 * Read the input CSV, render, and write the SVG file.
 *
 * Rendering happens before any write, so a bad CSV (empty, missing
 * columns) leaves no output file behind.
 */
export function render(spec: PlotSpec): void {
  const text = readFileSync(spec.input, "utf8");
  const svg = renderText(spec.kind, text);
  writeFileSync(spec.output, svg);
}
