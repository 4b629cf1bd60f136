/**
 * Seed aggregation for run tables.
 *
 * Curves aggregate per x value across seeds as the median with the
 * inter-quartile band; a mean +/- sample-standard-deviation mode is
 * available behind a flag.  Quantiles use linear interpolation between
 * order statistics.
 */

import { RunTable } from "./csv";

export type AggregateMode = "median_iqr" | "mean_std";

export interface Band {
  x: number[];
  center: number[];
  lo: number[];
  hi: number[];
  /** number of series that entered the aggregate */
  count: number;
}

export function quantile(values: number[], p: number): number {
  if (values.length === 0) {
    throw new Error("quantile of an empty list");
  }
  const sorted = [...values].sort((a, b) => a - b);
  const h = (sorted.length - 1) * p;
  const lo = Math.floor(h);
  const hi = Math.ceil(h);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * (h - lo);
}

export function mean(values: number[]): number {
  let total = 0;
  for (const v of values) {
    total += v;
  }
  return total / values.length;
}

/** Sample standard deviation (n - 1 denominator); zero for a single value. */
export function sampleStd(values: number[]): number {
  if (values.length < 2) {
    return 0;
  }
  const m = mean(values);
  let acc = 0;
  for (const v of values) {
    acc += (v - m) * (v - m);
  }
  return Math.sqrt(acc / (values.length - 1));
}

function summarize(values: number[], mode: AggregateMode): [number, number, number] {
  if (mode === "median_iqr") {
    return [quantile(values, 0.5), quantile(values, 0.25), quantile(values, 0.75)];
  }
  const m = mean(values);
  const s = sampleStd(values);
  return [m, m - s, m + s];
}

export interface Series {
  x: number[];
  y: number[];
}

/**
 * Aggregate several (x, y) series into one band over the x values shared by
 * every series.  Non-finite y values drop the x value entirely, so the band
 * is defined by the same seed count everywhere.
 */
export function aggregateSeries(series: Series[], mode: AggregateMode): Band {
  if (series.length === 0) {
    throw new Error("nothing to aggregate");
  }
  const maps = series.map((s) => {
    const m = new Map<number, number>();
    s.x.forEach((x, i) => m.set(x, s.y[i]));
    return m;
  });
  const shared = [...maps[0].keys()]
    .filter((x) => maps.every((m) => m.has(x) && Number.isFinite(m.get(x)!)))
    .sort((a, b) => a - b);
  const band: Band = { x: [], center: [], lo: [], hi: [], count: series.length };
  for (const x of shared) {
    const values = maps.map((m) => m.get(x)!);
    const [center, lo, hi] = summarize(values, mode);
    band.x.push(x);
    band.center.push(center);
    band.lo.push(lo);
    band.hi.push(hi);
  }
  return band;
}

/** Group run tables by optimizer id (sorted for deterministic ordering). */
export function groupByOptimizer(runs: RunTable[]): Map<string, RunTable[]> {
  const groups = new Map<string, RunTable[]>();
  for (const run of [...runs].sort((a, b) =>
    a.optimizer === b.optimizer
      ? a.eta === b.eta
        ? a.seed - b.seed
        : a.eta - b.eta
      : a.optimizer < b.optimizer
        ? -1
        : 1
  )) {
    const list = groups.get(run.optimizer) ?? [];
    list.push(run);
    groups.set(run.optimizer, list);
  }
  return groups;
}

/**
 * Per-optimizer curve bands: each run contributes the (xColumn, yColumn)
 * series of its recorded rows, aggregated across seeds.
 */
export function curveBands(
  runs: RunTable[],
  xColumn: string,
  yColumn: string,
  mode: AggregateMode
): Map<string, Band> {
  const out = new Map<string, Band>();
  for (const [optimizer, group] of groupByOptimizer(runs)) {
    const series: Series[] = group.map((run) => ({
      x: run.rows.map((r) => r[xColumn]),
      y: run.rows.map((r) => r[yColumn]),
    }));
    out.set(optimizer, aggregateSeries(series, mode));
  }
  return out;
}

/**
 * Per-optimizer final-value bands over the step-size grid: for each step
 * size, the yColumn of each run's last recorded row aggregated across
 * seeds.
 */
export function stepsizeBands(
  runs: RunTable[],
  yColumn: string,
  mode: AggregateMode
): Map<string, Band> {
  const out = new Map<string, Band>();
  for (const [optimizer, group] of groupByOptimizer(runs)) {
    const byEta = new Map<number, number[]>();
    for (const run of group) {
      const last = run.rows[run.rows.length - 1];
      const list = byEta.get(run.eta) ?? [];
      list.push(last[yColumn]);
      byEta.set(run.eta, list);
    }
    const etas = [...byEta.keys()].sort((a, b) => a - b);
    const band: Band = { x: [], center: [], lo: [], hi: [], count: group.length };
    for (const eta of etas) {
      const values = byEta.get(eta)!.filter((v) => Number.isFinite(v));
      if (values.length === 0) {
        continue;
      }
      const [center, lo, hi] = summarize(values, mode);
      band.x.push(eta);
      band.center.push(center);
      band.lo.push(lo);
      band.hi.push(hi);
    }
    out.set(optimizer, band);
  }
  return out;
}
