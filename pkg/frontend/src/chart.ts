/**
 * SVG line-chart renderer. Pure string construction from the inputs, so
 * a fixed spec always produces byte-identical output.
 */
import { Series } from "./series";
import { LineStyle, MarkerShape, styleFor } from "./style";

export interface VerticalMarker {
  x: number;
  label?: string;
}

export interface ChartOptions {
  title: string;
  xLabel: string;
  yLabel: string;
  width?: number;
  height?: number;
  /** Draw a point marker every k-th grid point; 0 disables markers. */
  markerEvery?: number;
  styles?: Record<string, Partial<LineStyle>>;
  verticalMarkers?: VerticalMarker[];
}

const MARGIN = { top: 40, right: 20, bottom: 52, left: 64 };

export function renderChart(series: Series[], opts: ChartOptions): string {
  const width = opts.width ?? 720;
  const height = opts.height ?? 480;
  const markerEvery = opts.markerEvery ?? 1;
  const pw = width - MARGIN.left - MARGIN.right;
  const ph = height - MARGIN.top - MARGIN.bottom;

  const xs: number[] = [];
  const ys: number[] = [];
  for (const s of series) {
    for (const p of s.points) {
      xs.push(p.x);
      ys.push(p.y);
    }
  }
  for (const m of opts.verticalMarkers ?? []) xs.push(m.x);
  const [x0, x1] = padded(extent(xs), 0.04);
  const [y0, y1] = padded(extent(ys), 0.06);

  const sx = (x: number) => MARGIN.left + ((x - x0) / (x1 - x0)) * pw;
  const sy = (y: number) => MARGIN.top + ph - ((y - y0) / (y1 - y0)) * ph;

  const xTicks = niceTicks(x0, x1, 8);
  const yTicks = niceTicks(y0, y1, 8);

  const out: string[] = [];
  out.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
      `viewBox="0 0 ${width} ${height}" font-family="Helvetica, Arial, sans-serif">`,
  );
  out.push(`<rect width="${width}" height="${height}" fill="#ffffff"/>`);
  out.push(
    `<text x="${fmt(width / 2)}" y="22" text-anchor="middle" font-size="15">` +
      `${escapeXml(opts.title)}</text>`,
  );

  // gridlines and tick labels
  for (const t of xTicks.values) {
    const x = fmt(sx(t));
    out.push(
      `<line x1="${x}" y1="${MARGIN.top}" x2="${x}" y2="${MARGIN.top + ph}" ` +
        `stroke="#e0e0e0" stroke-width="1"/>`,
    );
    out.push(
      `<text x="${x}" y="${MARGIN.top + ph + 18}" text-anchor="middle" ` +
        `font-size="12">${formatTick(t, xTicks.step)}</text>`,
    );
  }
  for (const t of yTicks.values) {
    const y = fmt(sy(t));
    out.push(
      `<line x1="${MARGIN.left}" y1="${y}" x2="${MARGIN.left + pw}" y2="${y}" ` +
        `stroke="#e0e0e0" stroke-width="1"/>`,
    );
    out.push(
      `<text x="${MARGIN.left - 8}" y="${y}" text-anchor="end" dominant-baseline="middle" ` +
        `font-size="12">${formatTick(t, yTicks.step)}</text>`,
    );
  }

  // axis titles and plot border
  out.push(
    `<text x="${fmt(MARGIN.left + pw / 2)}" y="${height - 12}" text-anchor="middle" ` +
      `font-size="13">${escapeXml(opts.xLabel)}</text>`,
  );
  out.push(
    `<text x="18" y="${fmt(MARGIN.top + ph / 2)}" text-anchor="middle" font-size="13" ` +
      `transform="rotate(-90 18 ${fmt(MARGIN.top + ph / 2)})">${escapeXml(opts.yLabel)}</text>`,
  );
  out.push(
    `<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${pw}" height="${ph}" ` +
      `fill="none" stroke="#333333" stroke-width="1"/>`,
  );

  for (const m of opts.verticalMarkers ?? []) {
    const x = fmt(sx(m.x));
    out.push(
      `<line x1="${x}" y1="${MARGIN.top}" x2="${x}" y2="${MARGIN.top + ph}" ` +
        `stroke="#555555" stroke-width="1.2" stroke-dasharray="4 3"/>`,
    );
    if (m.label !== undefined) {
      out.push(
        `<text x="${fmt(sx(m.x) + 5)}" y="${MARGIN.top + 14}" font-size="11" ` +
          `fill="#555555">${escapeXml(m.label)}</text>`,
      );
    }
  }

  series.forEach((s, i) => {
    const style = styleFor(s.label, i, opts.styles);
    if (s.points.length === 0) return;
    const d = s.points
      .map((p, j) => `${j === 0 ? "M" : "L"}${fmt(sx(p.x))},${fmt(sy(p.y))}`)
      .join(" ");
    const dash = style.dash === "" ? "" : ` stroke-dasharray="${style.dash}"`;
    out.push(
      `<path d="${d}" fill="none" stroke="${style.color}" stroke-width="1.8"${dash}/>`,
    );
    if (markerEvery > 0 && style.marker !== "none") {
      s.points.forEach((p, j) => {
        if (j % markerEvery !== 0) return;
        out.push(markerShape(style.marker, sx(p.x), sy(p.y), style.color));
      });
    }
  });

  out.push(...legend(series, opts.styles, MARGIN.left + pw, MARGIN.top));
  out.push("</svg>");
  return out.join("\n") + "\n";
}

function legend(
  series: Series[],
  styles: Record<string, Partial<LineStyle>> | undefined,
  rightEdge: number,
  topEdge: number,
): string[] {
  if (series.length === 0) return [];
  const rowH = 18;
  const longest = Math.max(...series.map((s) => s.label.length));
  const boxW = 46 + longest * 6.6;
  const boxH = 10 + series.length * rowH;
  const bx = rightEdge - boxW - 10;
  const by = topEdge + 10;
  const out: string[] = [];
  out.push(
    `<rect x="${fmt(bx)}" y="${fmt(by)}" width="${fmt(boxW)}" height="${fmt(boxH)}" ` +
      `fill="#ffffff" fill-opacity="0.9" stroke="#999999" stroke-width="1"/>`,
  );
  series.forEach((s, i) => {
    const style = styleFor(s.label, i, styles);
    const cy = by + 14 + i * rowH;
    const dash = style.dash === "" ? "" : ` stroke-dasharray="${style.dash}"`;
    out.push(
      `<line x1="${fmt(bx + 6)}" y1="${fmt(cy)}" x2="${fmt(bx + 34)}" y2="${fmt(cy)}" ` +
        `stroke="${style.color}" stroke-width="1.8"${dash}/>`,
    );
    if (style.marker !== "none") {
      out.push(markerShape(style.marker, bx + 20, cy, style.color));
    }
    out.push(
      `<text x="${fmt(bx + 40)}" y="${fmt(cy)}" font-size="11" ` +
        `dominant-baseline="middle">${escapeXml(s.label)}</text>`,
    );
  });
  return out;
}

function markerShape(shape: MarkerShape, x: number, y: number, color: string): string {
  const common = `fill="#ffffff" stroke="${color}" stroke-width="1.4"`;
  switch (shape) {
    case "circle":
      return `<circle cx="${fmt(x)}" cy="${fmt(y)}" r="3.2" ${common}/>`;
    case "square":
      return `<rect x="${fmt(x - 3)}" y="${fmt(y - 3)}" width="6" height="6" ${common}/>`;
    case "diamond":
      return (
        `<path d="M${fmt(x)},${fmt(y - 4)} L${fmt(x + 4)},${fmt(y)} ` +
        `L${fmt(x)},${fmt(y + 4)} L${fmt(x - 4)},${fmt(y)} Z" ${common}/>`
      );
    case "triangle":
      return (
        `<path d="M${fmt(x)},${fmt(y - 4)} L${fmt(x + 3.8)},${fmt(y + 3)} ` +
        `L${fmt(x - 3.8)},${fmt(y + 3)} Z" ${common}/>`
      );
    case "none":
      return "";
  }
}

function extent(values: number[]): [number, number] {
  if (values.length === 0) return [0, 1];
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  return [lo, hi];
}

function padded([lo, hi]: [number, number], frac: number): [number, number] {
  if (hi === lo) return [lo - 1, hi + 1];
  const pad = (hi - lo) * frac;
  return [lo - pad, hi + pad];
}

export interface TickSet {
  values: number[];
  step: number;
}

/** Round tick positions covering [lo, hi] with roughly `count` steps. */
export function niceTicks(lo: number, hi: number, count: number): TickSet {
  const span = hi - lo;
  const raw = span / Math.max(1, count);
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  const norm = raw / mag;
  const step = (norm <= 1 ? 1 : norm <= 2 ? 2 : norm <= 5 ? 5 : 10) * mag;
  const first = Math.ceil(lo / step) * step;
  const values: number[] = [];
  for (let v = first; v <= hi + step * 1e-9; v += step) {
    values.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return { values, step };
}

function formatTick(v: number, step: number): string {
  const decimals = Math.max(0, -Math.floor(Math.log10(step) + 1e-9));
  return (Object.is(v, -0) ? 0 : v).toFixed(decimals);
}

function fmt(v: number): string {
  const s = v.toFixed(2);
  return s === "-0.00" ? "0.00" : s;
}

function escapeXml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}
