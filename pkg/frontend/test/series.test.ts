import { readFileSync } from "fs";
import { describe, expect, it } from "vitest";

import { parseRankCsv, parseSweepCsv } from "../src/csv.js";
import { policySeries, rankSeries } from "../src/series.js";

const sweepRows = parseSweepCsv(
  readFileSync(new URL("fixtures/sweep.csv", import.meta.url), "utf8")
);
const rankRows = parseRankCsv(
  readFileSync(new URL("fixtures/ranks.csv", import.meta.url), "utf8")
);

describe("policySeries", () => {
  it("averages across seeds at each load", () => {
    const series = policySeries(sweepRows, "meanT");
    const sfs = series.find((s) => s.label === "ServerFillingSRPT")!;
    expect(sfs.points.map((p) => p.x)).toEqual([0.5, 0.8, 0.9]);
    expect(sfs.points[0].y).toBeCloseTo(1.7); // (1.6 + 1.8) / 2
  });

  it("truncates a series at its first unstable load", () => {
    const series = policySeries(sweepRows, "ratioT");
    const mw = series.find((s) => s.label === "MaxWeight")!;
    expect(mw.points.map((p) => p.x)).toEqual([0.5, 0.8]);
  });

  it("orders series alphabetically by policy", () => {
    const labels = policySeries(sweepRows, "meanT").map((s) => s.label);
    expect(labels).toEqual(["MaxWeight", "ServerFillingSRPT"]);
  });

  it("drops a load when only some seeds are stable there", () => {
    const partial = sweepRows.map((r) =>
      r.policy === "MaxWeight" && r.load === 0.8 && r.seed === 1
        ? { ...r, stable: false, meanT: null, ratioT: null }
        : r
    );
    const mw = policySeries(partial, "meanT").find((s) => s.label === "MaxWeight")!;
    expect(mw.points.map((p) => p.x)).toEqual([0.5]);
  });
});

describe("rankSeries", () => {
  it("builds one age-sorted series per class", () => {
    const series = rankSeries(rankRows);
    expect(series.map((s) => s.label)).toEqual(["class 0", "class 1"]);
    expect(series[0].points.map((p) => p.x)).toEqual([0, 1, 2]);
    expect(series[1].points.map((p) => p.y)).toEqual([0.5, 0.9, 1.4]);
  });
});
