export { CsvError, parseRankCsv, parseSweepCsv } from "./csv.js";
export type { RankRow, SweepRow } from "./csv.js";
export { policySeries, rankSeries } from "./series.js";
export type { Point, Series } from "./series.js";
export { chart } from "./svg.js";
export type { ChartOptions } from "./svg.js";
export { FIGURE_KINDS, render, renderText } from "./render.js";
export type { FigureKind, PlotSpec } from "./render.js";
