/**
 * Hand-rolled SVG chart primitives.  Everything is a pure function of its
 * inputs — no timestamps, no randomness — so a fixed spec always produces
 * byte-identical output.
 */

export interface BandSeries {
  label: string;
  color: string;
  x: number[];
  y: number[];
  bandLo?: number[];
  bandHi?: number[];
}

export interface RefLine {
  label: string;
  value: number;
}

export interface PanelOpts {
  title: string;
  xLabel: string;
  yLabel: string;
  logX: boolean;
  logY: boolean;
  series: BandSeries[];
  refLines: RefLine[];
}

export const PALETTE = [
  "#4361ee",
  "#e63946",
  "#2d6a4f",
  "#f4a261",
  "#9d4edd",
  "#0a9396",
  "#bc4749",
  "#6c757d",
];

export const PANEL_W = 340;
export const PANEL_H = 260;
const ML = 56;
const MR = 14;
const MT = 30;
const MB = 44;

export function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;");
}

export function fmt(v: number): string {
  if (v === 0) {
    return "0";
  }
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-3) {
    return v.toExponential(1).replace("e+", "e").replace("e-", "e-");
  }
  return Number.isInteger(v) ? String(v) : String(Number(v.toPrecision(4)));
}

function niceTicks(min: number, max: number, count: number): number[] {
  const range = max - min || 1;
  const rough = range / count;
  const mag = Math.pow(10, Math.floor(Math.log10(rough)));
  const step = [1, 2, 5, 10].map((m) => m * mag).find((s) => s >= rough) ?? rough;
  const ticks: number[] = [];
  for (let v = Math.ceil(min / step) * step; v <= max + step * 1e-9; v += step) {
    ticks.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return ticks;
}

function logTicks(min: number, max: number): number[] {
  const ticks: number[] = [];
  for (let e = Math.ceil(Math.log10(min) - 1e-9); Math.pow(10, e) <= max * (1 + 1e-9); e++) {
    const v = Math.pow(10, e);
    if (v >= min * (1 - 1e-9)) {
      ticks.push(v);
    }
  }
  return ticks.length >= 2 ? ticks : [min, max];
}

interface Scale {
  (v: number): number;
  ticks: number[];
}

function makeScale(
  values: number[],
  log: boolean,
  lo: number,
  hi: number
): Scale {
  const finite = values.filter((v) => Number.isFinite(v) && (!log || v > 0));
  let min = Math.min(...finite);
  let max = Math.max(...finite);
  if (!Number.isFinite(min) || !Number.isFinite(max)) {
    min = log ? 1e-1 : 0;
    max = 1;
  }
  if (min === max) {
    min = log ? min / 2 : min - 1;
    max = log ? max * 2 : max + 1;
  }
  if (log) {
    const lmin = Math.log10(min);
    const lmax = Math.log10(max);
    const scale = ((v: number) =>
      lo + ((Math.log10(v) - lmin) / (lmax - lmin)) * (hi - lo)) as Scale;
    scale.ticks = logTicks(min, max);
    return scale;
  }
  const pad = (max - min) * 0.05;
  const pmin = min - pad;
  const pmax = max + pad;
  const scale = ((v: number) =>
    lo + ((v - pmin) / (pmax - pmin)) * (hi - lo)) as Scale;
  scale.ticks = niceTicks(min, max, 5);
  return scale;
}

/** One chart panel as an SVG group, translated to (xOffset, 0). */
export function buildPanel(opts: PanelOpts, xOffset: number): string {
  const pw = PANEL_W - ML - MR;
  const ph = PANEL_H - MT - MB;

  const xsAll: number[] = [];
  const ysAll: number[] = [];
  for (const s of opts.series) {
    xsAll.push(...s.x);
    ysAll.push(...s.y);
    if (s.bandLo) {
      ysAll.push(...s.bandLo);
    }
    if (s.bandHi) {
      ysAll.push(...s.bandHi);
    }
  }
  ysAll.push(...opts.refLines.map((r) => r.value));
  const xOf = makeScale(xsAll, opts.logX, ML, ML + pw);
  const yOf = makeScale(ysAll, opts.logY, MT + ph, MT);

  const usable = (x: number, y: number) =>
    Number.isFinite(x) &&
    Number.isFinite(y) &&
    (!opts.logX || x > 0) &&
    (!opts.logY || y > 0);

  let g = `<g transform="translate(${xOffset},0)">\n`;
  g += `<text x="${ML}" y="${MT - 10}" font-size="10" font-weight="600" fill="#222">${esc(opts.title)}</text>\n`;

  // grid + y ticks
  for (const v of yOf.ticks) {
    const y = yOf(v).toFixed(1);
    g += `<line x1="${ML}" y1="${y}" x2="${ML + pw}" y2="${y}" stroke="#eee" stroke-width="0.5"/>\n`;
    g += `<text x="${ML - 4}" y="${(yOf(v) + 2.5).toFixed(1)}" text-anchor="end" font-size="6.5" fill="#666">${esc(fmt(v))}</text>\n`;
  }
  // x ticks
  for (const v of xOf.ticks) {
    const x = xOf(v).toFixed(1);
    g += `<line x1="${x}" y1="${MT + ph}" x2="${x}" y2="${MT + ph + 3}" stroke="#333" stroke-width="0.5"/>\n`;
    g += `<text x="${x}" y="${MT + ph + 12}" text-anchor="middle" font-size="6.5" fill="#666">${esc(fmt(v))}</text>\n`;
  }

  // reference lines
  for (const [i, ref] of opts.refLines.entries()) {
    const y = yOf(ref.value).toFixed(1);
    g += `<line x1="${ML}" y1="${y}" x2="${ML + pw}" y2="${y}" stroke="#555" stroke-width="0.8" stroke-dasharray="5,3"/>\n`;
    g += `<text x="${ML + 3}" y="${(yOf(ref.value) - 3 - 8 * i).toFixed(1)}" font-size="6" fill="#555">${esc(ref.label)}</text>\n`;
  }

  // bands first, lines on top
  for (const s of opts.series) {
    if (!s.bandLo || !s.bandHi) {
      continue;
    }
    const upper: string[] = [];
    const lower: string[] = [];
    for (let i = 0; i < s.x.length; i++) {
      if (usable(s.x[i], s.bandLo[i]) && usable(s.x[i], s.bandHi[i])) {
        upper.push(`${xOf(s.x[i]).toFixed(1)},${yOf(s.bandHi[i]).toFixed(1)}`);
        lower.push(`${xOf(s.x[i]).toFixed(1)},${yOf(s.bandLo[i]).toFixed(1)}`);
      }
    }
    if (upper.length >= 2) {
      g += `<polygon fill="${s.color}" opacity="0.15" points="${upper.join(" ")} ${lower.reverse().join(" ")}"/>\n`;
    }
  }
  for (const s of opts.series) {
    const pts: string[] = [];
    for (let i = 0; i < s.x.length; i++) {
      if (usable(s.x[i], s.y[i])) {
        pts.push(`${xOf(s.x[i]).toFixed(1)},${yOf(s.y[i]).toFixed(1)}`);
      }
    }
    if (pts.length >= 2) {
      g += `<polyline fill="none" stroke="${s.color}" stroke-width="1.2" points="${pts.join(" ")}"/>\n`;
    }
    for (const p of pts) {
      const [px, py] = p.split(",");
      g += `<circle cx="${px}" cy="${py}" r="1.4" fill="${s.color}"/>\n`;
    }
  }

  // frame
  g += `<line x1="${ML}" y1="${MT}" x2="${ML}" y2="${MT + ph}" stroke="#333" stroke-width="0.7"/>\n`;
  g += `<line x1="${ML}" y1="${MT + ph}" x2="${ML + pw}" y2="${MT + ph}" stroke="#333" stroke-width="0.7"/>\n`;
  g += `<text x="${ML + pw / 2}" y="${PANEL_H - 6}" text-anchor="middle" font-size="8" fill="#444">${esc(opts.xLabel)}</text>\n`;
  g += `<text x="12" y="${MT + ph / 2}" text-anchor="middle" font-size="8" fill="#444" transform="rotate(-90,12,${MT + ph / 2})">${esc(opts.yLabel)}</text>\n`;

  // legend
  const ly0 = MT + 6;
  for (const [i, s] of opts.series.entries()) {
    const ly = ly0 + i * 10;
    g += `<line x1="${ML + pw - 72}" y1="${ly}" x2="${ML + pw - 60}" y2="${ly}" stroke="${s.color}" stroke-width="1.2"/>\n`;
    g += `<text x="${ML + pw - 56}" y="${ly + 2.5}" font-size="6.5" fill="#444">${esc(s.label)}</text>\n`;
  }

  g += `</g>\n`;
  return g;
}

/** Compose panels side by side into one SVG document. */
export function composePanels(panels: string[]): string {
  const width = PANEL_W * panels.length;
  let s = `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${width} ${PANEL_H}" font-family="Helvetica, Arial, sans-serif">\n`;
  s += `<rect width="${width}" height="${PANEL_H}" fill="#fff"/>\n`;
  s += panels.join("");
  s += `</svg>\n`;
  return s;
}
