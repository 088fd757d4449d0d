import * as fs from "fs";
import * as path from "path";

import { describe, expect, it } from "vitest";

import { REQUIRED_COLUMNS, SchemaError, parseRecords } from "../src/schema";

const TESTDATA = path.resolve("testdata");

const HEADER = REQUIRED_COLUMNS.join(",");

describe("parseRecords", () => {
  it("reads the committed SNR sweep", () => {
    const text = fs.readFileSync(path.join(TESTDATA, "fig1a.csv"), "utf-8");
    const records = parseRecords(text, "fig1a.csv");
    expect(records).toHaveLength(54); // 9 grid points x 6 estimators
    const first = records[0]!;
    expect(first.experiment).toBe("fig1a");
    expect(first.sweepVar).toBe("snr_db");
    expect(first.sweepValue).toBe(-10);
    expect(first.trials).toBe(400);
    expect(Number.isFinite(first.nmseDb)).toBe(true);
    const labels = new Set(records.map((r) => r.estimator));
    expect(labels.size).toBe(6);
  });

  it("keeps quoted labels containing commas intact", () => {
    const text = fs.readFileSync(path.join(TESTDATA, "fig7.csv"), "utf-8");
    const records = parseRecords(text, "fig7.csv");
    const labels = new Set(records.map((r) => r.estimator));
    expect(labels.has("LMMSE-AO[rsls-init,SIR=0dB]")).toBe(true);
    expect(labels.size).toBe(6);
  });

  it("maps literal nan cells to NaN", () => {
    const row = "fig3,RS-LS,tau,5,nan,nan,nan,400,1";
    const records = parseRecords(`${HEADER}\n${row}`, "inline");
    expect(records).toHaveLength(1);
    expect(Number.isNaN(records[0]!.nmseDb)).toBe(true);
    expect(records[0]!.sweepValue).toBe(5);
  });

  it("names a missing column in the diagnostic", () => {
    const header = REQUIRED_COLUMNS.filter((c) => c !== "nmse_db").join(",");
    const row = "fig1a,LMMSE-AO,snr_db,0,0.01,0.011,400,1";
    expect(() => parseRecords(`${header}\n${row}`, "bad.csv")).toThrowError(
      /bad\.csv: missing required columns: nmse_db/,
    );
    try {
      parseRecords(`${header}\n${row}`, "bad.csv");
    } catch (err) {
      expect(err).toBeInstanceOf(SchemaError);
      expect((err as SchemaError).missing).toEqual(["nmse_db"]);
    }
  });

  it("lists every missing column", () => {
    const header = "experiment,estimator,sweep_var,sweep_value";
    try {
      parseRecords(`${header}\nfig1a,LMMSE-AO,snr_db,0`, "bad.csv");
      expect.unreachable("should have thrown");
    } catch (err) {
      expect((err as SchemaError).missing).toEqual([
        "nmse_linear",
        "nmse_db",
        "nmse_analytic_linear",
        "trials",
        "seed",
      ]);
    }
  });

  it("rejects rows with the wrong field count", () => {
    expect(() => parseRecords(`${HEADER}\nfig1a,LMMSE-AO`, "short.csv")).toThrowError(
      /short\.csv: malformed CSV/,
    );
  });
});
