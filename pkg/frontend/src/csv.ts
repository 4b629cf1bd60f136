/**
 * Loading of experiment run tables.
 *
 * Run CSVs follow the harness layout: a header row with fixed metric
 * columns, one row per recorded iteration, and a file name of the form
 * `{confighash}_{optimizer}_eta{step}_seed{seed}.csv`.  Dataset exports
 * (`*_train.csv` / `*_test.csv`) carry `x0..x{d-1},y` columns instead.
 */

import { readFileSync, readdirSync, existsSync } from "fs";
import * as path from "path";
import { parse } from "papaparse";

export class FigureError extends Error {}

export interface RunTable {
  path: string;
  /** optimizer id parsed from the file name */
  optimizer: string;
  eta: number;
  seed: number;
  columns: string[];
  rows: Record<string, number>[];
}

export interface LabeledPoint {
  x0: number;
  x1: number;
  y: number;
}

const RUN_NAME = /^[0-9a-f]+_(.+)_eta([^_]+)_seed(\d+)\.csv$/;

function escapeForRegExp(text: string): string {
  return text.replace(/[.*+?^${}()|[\]\\]/g, "\\$&");
}

/** Expand a glob whose only wildcard is `*` inside the base name. */
export function expandGlob(pattern: string): string[] {
  const dir = path.dirname(pattern);
  const base = path.basename(pattern);
  if (!base.includes("*")) {
    return existsSync(pattern) ? [pattern] : [];
  }
  if (!existsSync(dir)) {
    return [];
  }
  const rx = new RegExp(
    "^" + base.split("*").map(escapeForRegExp).join(".*") + "$"
  );
  return readdirSync(dir)
    .filter((name) => rx.test(name))
    .sort()
    .map((name) => path.join(dir, name));
}

export function parseRunName(
  file: string
): { optimizer: string; eta: number; seed: number } | null {
  const m = RUN_NAME.exec(path.basename(file));
  if (!m) {
    return null;
  }
  return { optimizer: m[1], eta: Number(m[2]), seed: Number(m[3]) };
}

function toNumber(value: unknown): number {
  if (typeof value === "number") {
    return value;
  }
  // the writer spells non-finite floats "nan" / "inf" / "-inf"
  if (value === "inf") {
    return Infinity;
  }
  if (value === "-inf") {
    return -Infinity;
  }
  return Number(value);
}

function parseCsv(file: string): { columns: string[]; rows: Record<string, number>[] } {
  const parsed = parse<Record<string, unknown>>(readFileSync(file, "utf8"), {
    header: true,
    dynamicTyping: true,
    skipEmptyLines: true,
  });
  const columns = parsed.meta.fields ?? [];
  const rows = parsed.data.map((raw) => {
    const row: Record<string, number> = {};
    for (const col of columns) {
      row[col] = toNumber(raw[col]);
    }
    return row;
  });
  return { columns, rows };
}

function requireColumns(file: string, columns: string[], needed: string[]): void {
  for (const col of needed) {
    if (!columns.includes(col)) {
      throw new FigureError(
        `column "${col}" missing from ${path.basename(file)} ` +
          `(has: ${columns.join(", ")})`
      );
    }
  }
}

/**
 * Load every run table matching the glob.  Files whose names do not follow
 * the run naming scheme (dataset exports, reports) are skipped.
 */
export function loadRuns(pattern: string, needed: string[]): RunTable[] {
  const files = expandGlob(pattern);
  if (files.length === 0) {
    throw new FigureError(`no files match "${pattern}"`);
  }
  const out: RunTable[] = [];
  for (const file of files) {
    const meta = parseRunName(file);
    if (meta === null) {
      continue;
    }
    const { columns, rows } = parseCsv(file);
    requireColumns(file, columns, needed);
    out.push({ path: file, ...meta, columns, rows });
  }
  if (out.length === 0) {
    throw new FigureError(`no run tables match "${pattern}"`);
  }
  return out;
}

/** Load 2-D labeled points from dataset export CSVs (columns x0, x1, y). */
export function loadPoints(pattern: string): LabeledPoint[] {
  const files = expandGlob(pattern);
  if (files.length === 0) {
    throw new FigureError(`no files match "${pattern}"`);
  }
  const points: LabeledPoint[] = [];
  for (const file of files) {
    const { columns, rows } = parseCsv(file);
    requireColumns(file, columns, ["x0", "x1", "y"]);
    for (const row of rows) {
      points.push({ x0: row.x0, x1: row.x1, y: row.y });
    }
  }
  return points;
}
