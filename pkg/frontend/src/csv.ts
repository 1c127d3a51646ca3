/**
 * Parsing and validation of the dmtlab CLI's CSV outputs.
 *
 * Two schemas exist: analytic curve tables (`r,scenario,diversity`) and
 * simulation sweeps (ten columns ending in `flag`, with a final `summary`
 * row whose p_hat/ci fields carry the fitted slope).  Headers must match
 * exactly; a mismatch aborts with the offending header in the message.
 */

import fs from "node:fs";
import Papa from "papaparse";
import { z } from "zod";

export const DMT_HEADER = ["r", "scenario", "diversity"] as const;
export const SWEEP_HEADER = [
  "snr_db",
  "scenario",
  "trials",
  "outages",
  "p_hat",
  "ci_low",
  "ci_high",
  "mean_fwd_power",
  "mean_fb_power",
  "flag",
] as const;

const finiteOrInf = z
  .string()
  .refine((s) => s === "inf" || s === "-inf" || Number.isFinite(Number(s)), {
    message: "not a number",
  })
  .transform((s) => Number(s === "inf" ? Infinity : s === "-inf" ? -Infinity : s));

const finite = z.string().refine((s) => Number.isFinite(Number(s)), {
  message: "not a finite number",
});

const dmtRowSchema = z.object({
  r: finite.transform(Number),
  scenario: z.string().min(1),
  diversity: finiteOrInf,
});

export interface DmtRow {
  r: number;
  scenario: string;
  diversity: number;
}

const sweepRowSchema = z.object({
  snr_db: finite.transform(Number),
  scenario: z.string().min(1),
  trials: finite.transform(Number),
  outages: finite.transform(Number),
  p_hat: finite.transform(Number),
  ci_low: finite.transform(Number),
  ci_high: finite.transform(Number),
  mean_fwd_power: finite.transform(Number),
  mean_fb_power: finite.transform(Number),
  flag: z.string(),
});

export interface SweepRow {
  snrDb: number;
  scenario: string;
  trials: number;
  outages: number;
  pHat: number;
  ciLow: number;
  ciHigh: number;
  flag: string;
}

export interface SweepSummary {
  scenario: string;
  /** fitted diversity slope, exactly as printed in the CSV */
  slopeText: string;
  slope: number;
  slopeLowText: string;
  slopeHighText: string;
}

export interface SweepTable {
  points: SweepRow[];
  summary: SweepSummary;
}

export class CsvSchemaError extends Error {}

function parseRaw(path: string): { header: string[]; rows: Record<string, string>[] } {
  const text = fs.readFileSync(path, "utf-8");
  if (text.trim().length === 0) {
    throw new CsvSchemaError(`${path}: empty CSV`);
  }
  const parsed = Papa.parse<Record<string, string>>(text.trim(), {
    header: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    const first = parsed.errors[0];
    throw new CsvSchemaError(`${path}: row ${first.row}: ${first.message}`);
  }
  const header = (parsed.meta.fields ?? []).map((f) => f.trim());
  return { header, rows: parsed.data };
}

function checkHeader(path: string, header: string[], expected: readonly string[]): void {
  if (header.length !== expected.length || header.some((h, i) => h !== expected[i])) {
    const offending =
      header.find((h, i) => h !== expected[i]) ?? `missing ${expected[header.length]}`;
    throw new CsvSchemaError(
      `${path}: header mismatch at '${offending}' (expected '${expected.join(",")}', got '${header.join(",")}')`,
    );
  }
}

/** Read an analytic curve table. */
export function readDmtCsv(path: string): DmtRow[] {
  const { header, rows } = parseRaw(path);
  checkHeader(path, header, DMT_HEADER);
  if (rows.length === 0) {
    throw new CsvSchemaError(`${path}: no data rows`);
  }
  return rows.map((row, i) => {
    const result = dmtRowSchema.safeParse(row);
    if (!result.success) {
      throw new CsvSchemaError(`${path}: row ${i + 2}: ${result.error.issues[0].message}`);
    }
    return result.data;
  });
}

/** Read one simulation sweep (per-SNR rows plus the trailing summary row). */
export function readSweepCsv(path: string): SweepTable {
  const { header, rows } = parseRaw(path);
  checkHeader(path, header, SWEEP_HEADER);
  if (rows.length === 0) {
    throw new CsvSchemaError(`${path}: no data rows`);
  }
  const last = rows[rows.length - 1];
  if (last.snr_db !== "summary") {
    throw new CsvSchemaError(`${path}: missing summary row (last snr_db = '${last.snr_db}')`);
  }
  if (last.p_hat.trim() === "") {
    throw new CsvSchemaError(`${path}: summary row carries no fitted slope`);
  }
  const summary: SweepSummary = {
    scenario: last.scenario,
    slopeText: last.p_hat,
    slope: Number(last.p_hat),
    slopeLowText: last.ci_low,
    slopeHighText: last.ci_high,
  };
  const points = rows.slice(0, -1).map((row, i) => {
    const result = sweepRowSchema.safeParse(row);
    if (!result.success) {
      const issue = result.error.issues[0];
      throw new CsvSchemaError(
        `${path}: row ${i + 2}, column '${issue.path.join(".")}': ${issue.message}`,
      );
    }
    const d = result.data;
    return {
      snrDb: d.snr_db,
      scenario: d.scenario,
      trials: d.trials,
      outages: d.outages,
      pHat: d.p_hat,
      ciLow: d.ci_low,
      ciHigh: d.ci_high,
      flag: d.flag,
    };
  });
  return { points, summary };
}
