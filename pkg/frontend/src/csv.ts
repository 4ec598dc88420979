import Papa from "papaparse";

/** Raised for malformed, empty, or column-deficient input CSVs. */
export class CsvError extends Error {}

export interface SweepRow {
  policy: string;
  load: number;
  seed: number;
  stable: boolean;
  meanT: number | null;
  ratioT: number | null;
}

export interface RankRow {
  classId: number;
  age: number;
  rank: number;
}

const SWEEP_REQUIRED = ["policy", "load", "seed", "stable", "mean_T", "ratio_T"];
const RANK_REQUIRED = ["class_id", "age", "rank"];

type RawRow = Record<string, string>;

function parseRows(text: string, required: string[], label: string): RawRow[] {
  const parsed = Papa.parse<RawRow>(text.trim(), {
    header: true,
    skipEmptyLines: true,
  });
  const fields = parsed.meta.fields ?? [];
  const missing = required.filter((c) => !fields.includes(c));
  if (missing.length > 0) {
    throw new CsvError(
      `${label} CSV is missing required column(s): ${missing.join(", ")} ` +
        `(found: ${fields.join(", ") || "none"})`
    );
  }
  if (parsed.data.length === 0) {
    throw new CsvError(`${label} CSV has a header but no data rows`);
  }
  return parsed.data;
}

function num(raw: string | undefined, column: string, row: number): number {
  const v = Number(raw);
  if (raw === undefined || raw === "" || !Number.isFinite(v)) {
    throw new CsvError(`row ${row}: column ${column} is not a number: ${raw}`);
  }
  return v;
}

/** Optional numeric cell: empty means unavailable (e.g. unstable run). */
function numOrNull(raw: string | undefined): number | null {
  if (raw === undefined || raw === "") return null;
  const v = Number(raw);
  return Number.isFinite(v) ? v : null;
}

export function parseSweepCsv(text: string): SweepRow[] {
  return parseRows(text, SWEEP_REQUIRED, "sweep").map((r, i) => ({
    policy: r.policy,
    load: num(r.load, "load", i + 1),
    seed: num(r.seed, "seed", i + 1),
    stable: r.stable === "true",
    meanT: numOrNull(r.mean_T),
    ratioT: numOrNull(r.ratio_T),
  }));
}

export function parseRankCsv(text: string): RankRow[] {
  return parseRows(text, RANK_REQUIRED, "rank").map((r, i) => ({
    classId: num(r.class_id, "class_id", i + 1),
    age: num(r.age, "age", i + 1),
    rank: num(r.rank, "rank", i + 1),
  }));
}
