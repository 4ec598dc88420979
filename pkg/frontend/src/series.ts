import { RankRow, SweepRow } from "./csv.js";

export interface Point {
  x: number;
  y: number;
}

export interface Series {
  label: string;
  points: Point[];
}

/**
 * One series per policy, averaged across seeds at each load.
 *
 * Loads are walked in ascending order; the series is truncated at the first
 * load where the policy has no stable row with a finite value, so unstable
 * high-load runs end the line instead of plotting as gaps or zeros.
 */
export function policySeries(
  rows: SweepRow[],
  value: "meanT" | "ratioT"
): Series[] {
  const byPolicy = new Map<string, SweepRow[]>();
  for (const r of rows) {
    const bucket = byPolicy.get(r.policy);
    if (bucket) bucket.push(r);
    else byPolicy.set(r.policy, [r]);
  }

  const out: Series[] = [];
  for (const policy of [...byPolicy.keys()].sort()) {
    const mine = byPolicy.get(policy)!;
    const loads = [...new Set(mine.map((r) => r.load))].sort((a, b) => a - b);
    const points: Point[] = [];
    for (const load of loads) {
      const here = mine.filter((r) => r.load === load);
      const usable = here.filter((r) => r.stable && r[value] !== null);
      if (usable.length === 0 || usable.length < here.length) break;
      const mean =
        usable.reduce((s, r) => s + (r[value] as number), 0) / usable.length;
      points.push({ x: load, y: mean });
    }
    if (points.length > 0) out.push({ label: policy, points });
  }
  return out;
}

/** One series per job class, points ordered by age. */
export function rankSeries(rows: RankRow[]): Series[] {
  const byClass = new Map<number, RankRow[]>();
  for (const r of rows) {
    const bucket = byClass.get(r.classId);
    if (bucket) bucket.push(r);
    else byClass.set(r.classId, [r]);
  }
  const out: Series[] = [];
  for (const id of [...byClass.keys()].sort((a, b) => a - b)) {
    const points = byClass
      .get(id)!
      .sort((a, b) => a.age - b.age)
      .map((r) => ({ x: r.age, y: r.rank }));
    out.push({ label: `class ${id}`, points });
  }
  return out;
}
