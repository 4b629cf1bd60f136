import * as fs from "fs";
import * as path from "path";
import { z } from "zod";
import {
  FigureError,
  LabeledPoint,
  loadPoints,
  loadRuns,
  RunTable,
} from "./csv";
import { AggregateMode, Band, curveBands, stepsizeBands } from "./aggregate";
import {
  BandSeries,
  buildPanel,
  composePanels,
  esc,
  PALETTE,
  PanelOpts,
  PANEL_H,
  PANEL_W,
  RefLine,
} from "./svg";

const refLineSchema = z.object({
  label: z.string(),
  value: z.number(),
});

const panelSchema = z.object({
  title: z.string(),
  x: z.string(),
  y: z.string(),
  logX: z.boolean().default(false),
  logY: z.boolean().default(false),
  refLines: z.array(refLineSchema).default([]),
});

const curvesSchema = z.object({
  kind: z.literal("curves"),
  input: z.string(),
  aggregate: z.enum(["median_iqr", "mean_std"]).default("median_iqr"),
  panels: z.array(panelSchema).min(1),
  out: z.string(),
  format: z.literal("svg").default("svg"),
});

const stepsizeSchema = z.object({
  kind: z.literal("stepsize"),
  input: z.string(),
  y: z.string(),
  title: z.string().default("final value vs step size"),
  logX: z.boolean().default(true),
  logY: z.boolean().default(false),
  aggregate: z.enum(["median_iqr", "mean_std"]).default("median_iqr"),
  refLines: z.array(refLineSchema).default([]),
  out: z.string(),
  format: z.literal("svg").default("svg"),
});

const directionSchema = z.object({
  label: z.string(),
  vector: z.tuple([z.number(), z.number()]),
});

const boundarySchema = z.object({
  kind: z.literal("boundary"),
  points: z.string(),
  directions: z.array(directionSchema),
  title: z.string().default("decision directions"),
  out: z.string(),
  format: z.literal("svg").default("svg"),
});

export const figureSchema = z.discriminatedUnion("kind", [
  curvesSchema,
  stepsizeSchema,
  boundarySchema,
]);

export type FigureSpec = z.infer<typeof figureSchema>;
export type CurvesSpec = z.infer<typeof curvesSchema>;
export type StepsizeSpec = z.infer<typeof stepsizeSchema>;
export type BoundarySpec = z.infer<typeof boundarySchema>;

export interface RenderResult {
  out: string;
  svg: string;
  panels: number;
  runs: number;
}

/** Parse and validate a figure spec.  Relative paths inside the file are
 * resolved against the directory the file lives in. */
export function loadSpec(specPath: string): FigureSpec {
  let raw: string;
  try {
    raw = fs.readFileSync(specPath, "utf8");
  } catch {
    throw new FigureError(`cannot read spec file ${specPath}`);
  }
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch (err) {
    throw new FigureError(`spec file ${specPath} is not valid JSON: ${err}`);
  }
  const parsed = figureSchema.safeParse(data);
  if (!parsed.success) {
    const issue = parsed.error.issues[0];
    throw new FigureError(
      `invalid figure spec ${specPath}: ${issue.path.join(".")}: ${issue.message}`
    );
  }
  const spec = parsed.data;
  const base = path.dirname(path.resolve(specPath));
  const resolve = (p: string) => (path.isAbsolute(p) ? p : path.join(base, p));
  if (spec.kind === "boundary") {
    spec.points = resolve(spec.points);
  } else {
    spec.input = resolve(spec.input);
  }
  spec.out = resolve(spec.out);
  return spec;
}

function seriesColor(i: number): string {
  return PALETTE[i % PALETTE.length];
}

function bandToSeries(label: string, index: number, band: Band): BandSeries {
  const many = band.count > 1;
  return {
    label,
    color: seriesColor(index),
    x: band.x,
    y: band.center,
    bandLo: many ? band.lo : undefined,
    bandHi: many ? band.hi : undefined,
  };
}

function renderCurves(spec: CurvesSpec): RenderResult {
  const needed = new Set<string>();
  for (const p of spec.panels) {
    needed.add(p.x);
    needed.add(p.y);
  }
  const runs = loadRuns(spec.input, [...needed]);

  const panels = spec.panels.map((p, pi) => {
    const bands = curveBands(runs, p.x, p.y, spec.aggregate as AggregateMode);
    const series = [...bands.entries()].map(([label, band], li) =>
      bandToSeries(label, li, band)
    );
    const opts: PanelOpts = {
      title: p.title,
      xLabel: p.x,
      yLabel: p.y,
      logX: p.logX,
      logY: p.logY,
      series,
      refLines: p.refLines as RefLine[],
    };
    return buildPanel(opts, pi * PANEL_W);
  });

  return {
    out: spec.out,
    svg: composePanels(panels),
    panels: spec.panels.length,
    runs: runs.length,
  };
}

function renderStepsize(spec: StepsizeSpec): RenderResult {
  const runs = loadRuns(spec.input, [spec.y]);
  const bands = stepsizeBands(runs, spec.y, spec.aggregate as AggregateMode);
  const series = [...bands.entries()].map(([label, band], li) =>
    bandToSeries(label, li, band)
  );

  const opts: PanelOpts = {
    title: spec.title,
    xLabel: "step size",
    yLabel: spec.y,
    logX: spec.logX,
    logY: spec.logY,
    series,
    refLines: spec.refLines as RefLine[],
  };
  return {
    out: spec.out,
    svg: composePanels([buildPanel(opts, 0)]),
    panels: 1,
    runs: runs.length,
  };
}

function renderBoundary(spec: BoundarySpec): RenderResult {
  const points = loadPoints(spec.points);
  const size = Math.max(PANEL_W, PANEL_H);
  const m = 34;
  const inner = size - 2 * m;

  const xs = points.map((p) => p.x0);
  const ys = points.map((p) => p.x1);
  const lim = Math.max(
    ...xs.map(Math.abs),
    ...ys.map(Math.abs),
    1e-12
  ) * 1.08;
  const sx = (v: number) => m + ((v + lim) / (2 * lim)) * inner;
  const sy = (v: number) => m + ((lim - v) / (2 * lim)) * inner;

  let g = `<g>\n`;
  g += `<text x="${m}" y="${m - 12}" font-size="10" font-weight="600" fill="#222">${esc(spec.title)}</text>\n`;
  g += `<line x1="${m}" y1="${sy(0).toFixed(1)}" x2="${m + inner}" y2="${sy(0).toFixed(1)}" stroke="#ddd" stroke-width="0.6"/>\n`;
  g += `<line x1="${sx(0).toFixed(1)}" y1="${m}" x2="${sx(0).toFixed(1)}" y2="${m + inner}" stroke="#ddd" stroke-width="0.6"/>\n`;

  const sorted = [...points].sort((a, b) => a.x0 - b.x0 || a.x1 - b.x1);
  for (const p of sorted) {
    const fill = p.y > 0 ? "#4361ee" : "#e63946";
    g += `<circle cx="${sx(p.x0).toFixed(1)}" cy="${sy(p.x1).toFixed(1)}" r="1.6" fill="${fill}" opacity="0.6"/>\n`;
  }

  const lineColors = ["#1d3557", "#2d6a4f", "#9d4edd", "#f4a261"];
  for (const [i, dir] of spec.directions.entries()) {
    const [a, b] = dir.vector;
    const norm = Math.hypot(a, b);
    if (norm === 0) {
      throw new FigureError(`direction "${dir.label}" has zero length`);
    }
    const ux = (a / norm) * lim;
    const uy = (b / norm) * lim;
    const color = lineColors[i % lineColors.length];
    g += `<line x1="${sx(-ux).toFixed(1)}" y1="${sy(-uy).toFixed(1)}" x2="${sx(ux).toFixed(1)}" y2="${sy(uy).toFixed(1)}" stroke="${color}" stroke-width="1.3" stroke-dasharray="${i === 0 ? "none" : "6,3"}"/>\n`;
    const tx = sx(ux * 0.82);
    const ty = sy(uy * 0.82) - 4 - 8 * i;
    g += `<text x="${tx.toFixed(1)}" y="${ty.toFixed(1)}" font-size="6.5" fill="${color}">${esc(dir.label)}</text>\n`;
  }

  // legend for point classes
  g += `<circle cx="${m + 8}" cy="${size - 14}" r="2" fill="#4361ee"/>\n`;
  g += `<text x="${m + 14}" y="${size - 11.5}" font-size="6.5" fill="#444">y = +1</text>\n`;
  g += `<circle cx="${m + 52}" cy="${size - 14}" r="2" fill="#e63946"/>\n`;
  g += `<text x="${m + 58}" y="${size - 11.5}" font-size="6.5" fill="#444">y = -1</text>\n`;
  g += `</g>\n`;

  let svg = `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${size} ${size}" font-family="Helvetica, Arial, sans-serif">\n`;
  svg += `<rect width="${size}" height="${size}" fill="#fff"/>\n`;
  svg += g;
  svg += `</svg>\n`;
  return { out: spec.out, svg, panels: 1, runs: points.length };
}

/** Render a figure spec to its output path and return a small summary. */
export function render(spec: FigureSpec, outOverride?: string): RenderResult {
  let result: RenderResult;
  if (spec.kind === "curves") {
    result = renderCurves(spec);
  } else if (spec.kind === "stepsize") {
    result = renderStepsize(spec);
  } else {
    result = renderBoundary(spec);
  }
  if (outOverride) {
    result.out = path.resolve(outOverride);
  }
  fs.mkdirSync(path.dirname(result.out), { recursive: true });
  fs.writeFileSync(result.out, result.svg, "utf8");
  return result;
}

export { FigureError, LabeledPoint, RunTable };
