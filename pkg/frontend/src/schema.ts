/**
 * The nine-column CSV schema produced by the nfris sweep and trace
 * commands. This module is the only coupling to the simulator: rows in,
 * typed records out.
 */
import Papa from "papaparse";

export const REQUIRED_COLUMNS = [
  "experiment",
  "estimator",
  "sweep_var",
  "sweep_value",
  "nmse_linear",
  "nmse_db",
  "nmse_analytic_linear",
  "trials",
  "seed",
] as const;

export type ColumnName = (typeof REQUIRED_COLUMNS)[number];

export interface SweepRecord {
  experiment: string;
  estimator: string;
  sweepVar: string;
  sweepValue: number;
  nmseLinear: number;
  nmseDb: number;
  nmseAnalyticLinear: number;
  trials: number;
  seed: number;
}

/** Raised for malformed input; `missing` carries absent column names. */
export class SchemaError extends Error {
  readonly missing: string[];

  constructor(message: string, missing: string[] = []) {
    super(message);
    this.name = "SchemaError";
    this.missing = missing;
  }
}

/**
 * Parse CSV text into records, validating the header first. `source` is
 * used in diagnostics so the caller can pass a file name.
 */
export function parseRecords(csvText: string, source: string): SweepRecord[] {
  const parsed = Papa.parse<Record<string, string>>(csvText.trim(), {
    header: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    const first = parsed.errors[0]!;
    const where = first.row === undefined ? "" : ` (row ${first.row})`;
    throw new SchemaError(`${source}: malformed CSV${where}: ${first.message}`);
  }
  const fields = parsed.meta.fields ?? [];
  const missing = REQUIRED_COLUMNS.filter((c) => !fields.includes(c));
  if (missing.length > 0) {
    throw new SchemaError(
      `${source}: missing required columns: ${missing.join(", ")}`,
      [...missing],
    );
  }
  return parsed.data.map((row) => ({
    experiment: row.experiment ?? "",
    estimator: row.estimator ?? "",
    sweepVar: row.sweep_var ?? "",
    sweepValue: toNumber(row.sweep_value),
    nmseLinear: toNumber(row.nmse_linear),
    nmseDb: toNumber(row.nmse_db),
    nmseAnalyticLinear: toNumber(row.nmse_analytic_linear),
    trials: toNumber(row.trials),
    seed: toNumber(row.seed),
  }));
}

function toNumber(raw: string | undefined): number {
  if (raw === undefined || raw === "") return NaN;
  // the simulator writes infeasible points as literal "nan"
  if (raw === "nan" || raw === "NaN") return NaN;
  return Number(raw);
}
