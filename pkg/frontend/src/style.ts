/** Deterministic line styles keyed by estimator label. */

export type MarkerShape = "circle" | "square" | "diamond" | "triangle" | "none";

export interface LineStyle {
  color: string;
  /** SVG stroke-dasharray, empty string for solid. */
  dash: string;
  marker: MarkerShape;
}

const PALETTE = [
  "#1f77b4",
  "#ff7f0e",
  "#2ca02c",
  "#d62728",
  "#9467bd",
  "#8c564b",
  "#e377c2",
  "#17becf",
] as const;

const MARKER_CYCLE: MarkerShape[] = ["circle", "square", "diamond", "triangle"];

/** Fixed styles for the simulator's estimator labels, so the same
 * estimator looks the same across every figure. */
const KNOWN: Record<string, LineStyle> = {
  "LMMSE-AO": { color: "#1f77b4", dash: "", marker: "circle" },
  "LMMSE-Phi0": { color: "#ff7f0e", dash: "", marker: "square" },
  "RS-LS": { color: "#2ca02c", dash: "", marker: "diamond" },
  "LMMSE-w/o-EMI": { color: "#d62728", dash: "6 3", marker: "triangle" },
  "LMMSE-FF-stats": { color: "#9467bd", dash: "6 3", marker: "circle" },
  "RS-LS-FF-stats": { color: "#8c564b", dash: "6 3", marker: "diamond" },
};

/**
 * Style for a series: explicit override first, then the fixed map, then
 * a palette color by series index.
 */
export function styleFor(
  label: string,
  index: number,
  overrides?: Record<string, Partial<LineStyle>>,
): LineStyle {
  const base: LineStyle = KNOWN[label] ?? {
    color: PALETTE[index % PALETTE.length]!,
    dash: "",
    marker: MARKER_CYCLE[index % MARKER_CYCLE.length]!,
  };
  const over = overrides?.[label];
  return over === undefined ? base : { ...base, ...over };
}
