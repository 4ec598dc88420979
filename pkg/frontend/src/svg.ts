import { Series } from "./series.js";

/**
 * Minimal deterministic SVG line charts.
 *
 * Everything here is a pure function of its arguments: fixed palette, fixed
 * geometry, fixed number formatting, no ids, no timestamps. Rendering the
 * same data twice yields byte-identical output.
 */

export interface ChartOptions {
  title: string;
  xLabel: string;
  yLabel: string;
  logY?: boolean;
  /** Draw a dashed horizontal reference line at this y value. */
  refLineY?: number;
}

const WIDTH = 720;
const HEIGHT = 440;
const MARGIN = { top: 40, right: 200, bottom: 55, left: 75 };

const PALETTE = [
  "#1f77b4",
  "#d62728",
  "#2ca02c",
  "#9467bd",
  "#ff7f0e",
  "#8c564b",
  "#17becf",
  "#7f7f7f",
];

// Shortest stable decimal form; avoids exponent noise for axis labels.
function fmt(n: number): string {
  return String(Number(n.toPrecision(6)));
}

function linearTicks(lo: number, hi: number, count = 6): number[] {
  if (lo === hi) return [lo];
  const span = hi - lo;
  const step0 = span / count;
  const mag = Math.pow(10, Math.floor(Math.log10(step0)));
  const step = [1, 2, 5, 10].map((m) => m * mag).find((s) => span / s <= count)!;
  const ticks: number[] = [];
  for (let t = Math.ceil(lo / step) * step; t <= hi + step * 1e-9; t += step) {
    ticks.push(Number(t.toPrecision(12)));
  }
  return ticks;
}

function logTicks(lo: number, hi: number): number[] {
  const decade = (mantissas: number[]) => {
    const ticks: number[] = [];
    const eLo = Math.floor(Math.log10(lo));
    const eHi = Math.ceil(Math.log10(hi));
    for (let e = eLo; e <= eHi; e++) {
      for (const m of mantissas) {
        const t = m * Math.pow(10, e);
        if (t >= lo * (1 - 1e-9) && t <= hi * (1 + 1e-9)) ticks.push(t);
      }
    }
    return ticks;
  };
  const decades = decade([1]);
  if (decades.length >= 3) return decades;
  const fine = decade([1, 2, 5]);
  return fine.length >= 2 ? fine : [lo, hi];
}

export function chart(series: Series[], opts: ChartOptions): string {
  const pts = series.flatMap((s) => s.points);
  if (pts.length === 0) throw new Error("no points to plot");

  const xs = pts.map((p) => p.x);
  const ys = pts.map((p) => p.y).concat(opts.refLineY !== undefined ? [opts.refLineY] : []);
  const xLo = Math.min(...xs);
  const xHi = Math.max(...xs);
  let yLo = Math.min(...ys);
  let yHi = Math.max(...ys);
  if (opts.logY && yLo <= 0) throw new Error("log scale requires positive values");
  if (yLo === yHi) {
    yLo = opts.logY ? yLo / 2 : yLo - 1;
    yHi = opts.logY ? yHi * 2 : yHi + 1;
  }

  const plotW = WIDTH - MARGIN.left - MARGIN.right;
  const plotH = HEIGHT - MARGIN.top - MARGIN.bottom;
  const sx = (x: number) =>
    MARGIN.left + (xHi === xLo ? 0.5 : (x - xLo) / (xHi - xLo)) * plotW;
  const sy = (y: number) => {
    const f = opts.logY
      ? (Math.log10(y) - Math.log10(yLo)) / (Math.log10(yHi) - Math.log10(yLo))
      : (y - yLo) / (yHi - yLo);
    return MARGIN.top + (1 - f) * plotH;
  };

  const xTicks = linearTicks(xLo, xHi);
  const yTicks = opts.logY ? logTicks(yLo, yHi) : linearTicks(yLo, yHi);

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" ` +
      `viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="sans-serif" font-size="12">`
  );
  parts.push(`<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`);
  parts.push(
    `<text x="${WIDTH / 2}" y="22" text-anchor="middle" font-size="15">${opts.title}</text>`
  );

  for (const t of xTicks) {
    const x = fmt(sx(t));
    parts.push(
      `<line x1="${x}" y1="${MARGIN.top}" x2="${x}" y2="${MARGIN.top + plotH}" stroke="#dddddd"/>`
    );
    parts.push(
      `<text x="${x}" y="${MARGIN.top + plotH + 18}" text-anchor="middle">${fmt(t)}</text>`
    );
  }
  for (const t of yTicks) {
    const y = fmt(sy(t));
    parts.push(
      `<line x1="${MARGIN.left}" y1="${y}" x2="${MARGIN.left + plotW}" y2="${y}" stroke="#dddddd"/>`
    );
    parts.push(
      `<text x="${MARGIN.left - 8}" y="${y}" text-anchor="end" dominant-baseline="middle">${fmt(t)}</text>`
    );
  }

  parts.push(
    `<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${plotW}" height="${plotH}" ` +
      `fill="none" stroke="black"/>`
  );
  parts.push(
    `<text x="${MARGIN.left + plotW / 2}" y="${HEIGHT - 14}" text-anchor="middle">${opts.xLabel}</text>`
  );
  parts.push(
    `<text x="20" y="${MARGIN.top + plotH / 2}" text-anchor="middle" ` +
      `transform="rotate(-90 20 ${MARGIN.top + plotH / 2})">${opts.yLabel}</text>`
  );

  if (opts.refLineY !== undefined) {
    const y = fmt(sy(opts.refLineY));
    parts.push(
      `<line x1="${MARGIN.left}" y1="${y}" x2="${MARGIN.left + plotW}" y2="${y}" ` +
        `stroke="black" stroke-dasharray="6 4" class="reference-line"/>`
    );
  }

  series.forEach((s, i) => {
    const color = PALETTE[i % PALETTE.length];
    const path = s.points
      .map((p) => `${fmt(sx(p.x))},${fmt(sy(p.y))}`)
      .join(" ");
    parts.push(
      `<polyline points="${path}" fill="none" stroke="${color}" stroke-width="2"/>`
    );
    for (const p of s.points) {
      parts.push(
        `<circle cx="${fmt(sx(p.x))}" cy="${fmt(sy(p.y))}" r="3" fill="${color}"/>`
      );
    }
    const ly = MARGIN.top + 10 + i * 20;
    const lx = MARGIN.left + plotW + 14;
    parts.push(
      `<line x1="${lx}" y1="${ly}" x2="${lx + 24}" y2="${ly}" stroke="${color}" stroke-width="2"/>`
    );
    parts.push(
      `<text x="${lx + 30}" y="${ly}" dominant-baseline="middle">${s.label}</text>`
    );
  });

  parts.push("</svg>");
  return parts.join("\n") + "\n";
}
