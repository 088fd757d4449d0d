/** Figure specs: which CSV column drives x, labels, styling, markers. */
import * as fs from "fs";
import * as path from "path";

import { ChartOptions, VerticalMarker, renderChart } from "./chart";
import { parseRecords } from "./schema";
import { toSeries } from "./series";
import { LineStyle } from "./style";

export interface FigureSpec {
  name: string;
  title: string;
  /** Expected `sweep_var` value in the CSV; also the x-axis meaning. */
  xVar: string;
  xLabel: string;
  yLabel?: string;
  markerEvery?: number;
  styles?: Record<string, Partial<LineStyle>>;
  verticalMarkers?: VerticalMarker[];
  /** Default input/output paths, overridable on the command line. */
  csv?: string;
  out?: string;
}

/** Distance where the reference surface's radiating near field ends. */
const SURFACE_FAR_FIELD_M = 29.6;

export const PRESETS: Record<string, FigureSpec> = {
  fig1a: {
    name: "fig1a",
    title: "NMSE vs SNR, all estimators",
    xVar: "snr_db",
    xLabel: "SNR (dB)",
  },
  fig1c: {
    name: "fig1c",
    title: "NMSE vs SNR, high-band array",
    xVar: "snr_db",
    xLabel: "SNR (dB)",
  },
  fig2: {
    name: "fig2",
    title: "NMSE vs interference level",
    xVar: "sir_db",
    xLabel: "SIR (dB)",
  },
  fig3: {
    name: "fig3",
    title: "NMSE vs pilot length",
    xVar: "tau",
    xLabel: "pilot length",
  },
  fig4: {
    name: "fig4",
    title: "NMSE vs array size",
    xVar: "n_v",
    xLabel: "vertical array elements",
  },
  fig5: {
    name: "fig5",
    title: "NMSE with near- vs far-field statistics",
    xVar: "snr_db",
    xLabel: "SNR (dB)",
  },
  fig6: {
    name: "fig6",
    title: "NMSE vs link distance",
    xVar: "distance_m",
    xLabel: "link distance (m)",
    verticalMarkers: [{ x: SURFACE_FAR_FIELD_M, label: "Fraunhofer distance" }],
  },
  fig7: {
    name: "fig7",
    title: "Schedule optimization traces",
    xVar: "ao_iteration",
    xLabel: "iteration",
    markerEvery: 0,
  },
};

export const PRESET_NAMES = Object.keys(PRESETS);

/** Render CSV text under the given spec; returns the SVG document. */
export function renderFigure(spec: FigureSpec, csvText: string, source: string): string {
  const records = parseRecords(csvText, source);
  const series = toSeries(records, spec.xVar, source);
  const opts: ChartOptions = {
    title: spec.title,
    xLabel: spec.xLabel,
    yLabel: spec.yLabel ?? "NMSE (dB)",
    markerEvery: spec.markerEvery,
    styles: spec.styles,
    verticalMarkers: spec.verticalMarkers,
  };
  return renderChart(series, opts);
}

/** File-to-file variant; creates the output directory when needed. */
export function renderFigureFile(spec: FigureSpec, csvPath: string, outPath: string): void {
  const csvText = fs.readFileSync(csvPath, "utf-8");
  const svg = renderFigure(spec, csvText, path.basename(csvPath));
  fs.mkdirSync(path.dirname(path.resolve(outPath)), { recursive: true });
  fs.writeFileSync(outPath, svg);
}
