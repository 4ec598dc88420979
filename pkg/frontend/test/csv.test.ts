import { readFileSync } from "fs";
import { describe, expect, it } from "vitest";

import { CsvError, parseRankCsv, parseSweepCsv } from "../src/csv.js";

const sweepText = readFileSync(new URL("fixtures/sweep.csv", import.meta.url), "utf8");
const rankText = readFileSync(new URL("fixtures/ranks.csv", import.meta.url), "utf8");

describe("parseSweepCsv", () => {
  it("parses every data row with typed fields", () => {
    const rows = parseSweepCsv(sweepText);
    expect(rows).toHaveLength(12);
    const first = rows[0];
    expect(first.policy).toBe("MaxWeight");
    expect(first.load).toBe(0.5);
    expect(first.seed).toBe(0);
    expect(first.stable).toBe(true);
    expect(first.meanT).toBeCloseTo(2.1);
    expect(first.ratioT).toBeCloseTo(1.5);
  });

  it("maps empty cells on unstable rows to null", () => {
    const rows = parseSweepCsv(sweepText);
    const unstable = rows.filter((r) => !r.stable);
    expect(unstable).toHaveLength(2);
    for (const r of unstable) {
      expect(r.meanT).toBeNull();
      expect(r.ratioT).toBeNull();
    }
  });

  it("names the missing columns in its error", () => {
    const bad = "policy,load,seed\nFCFS,0.5,0\n";
    expect(() => parseSweepCsv(bad)).toThrow(CsvError);
    expect(() => parseSweepCsv(bad)).toThrow(/stable.*mean_T.*ratio_T/);
  });

  it("rejects an empty file", () => {
    expect(() => parseSweepCsv("")).toThrow(CsvError);
  });

  it("rejects a header-only file", () => {
    const headerOnly = sweepText.split("\n")[0] + "\n";
    expect(() => parseSweepCsv(headerOnly)).toThrow(/no data rows/);
  });

  it("rejects non-numeric required cells", () => {
    const bad = sweepText.split("\n")[0] + "\nFCFS,8,power_of_two,oops,0.5,0,10,true,1,0,1,1,1,0,1,0,1,0,1,0,0.1\n";
    expect(() => parseSweepCsv(bad)).toThrow(/load/);
  });
});

describe("parseRankCsv", () => {
  it("parses class, age, and rank columns", () => {
    const rows = parseRankCsv(rankText);
    expect(rows).toHaveLength(6);
    expect(rows[0]).toEqual({ classId: 0, age: 0, rank: 1 });
  });

  it("rejects a sweep CSV handed to the rank parser", () => {
    expect(() => parseRankCsv(sweepText)).toThrow(/class_id/);
  });
});
