/** Group sweep records into per-estimator line series. */
import { SchemaError, SweepRecord } from "./schema";

export interface Point {
  x: number;
  y: number;
}

export interface Series {
  label: string;
  points: Point[];
}

/**
 * One series per estimator, ordered by first appearance in the file,
 * points sorted by x. Non-finite y values (infeasible sweep points) are
 * dropped, so a series may start later than the grid does.
 *
 * Every row must carry `sweep_var === xVar`; a mismatch means the CSV
 * belongs to a different experiment than the figure expects.
 */
export function toSeries(records: SweepRecord[], xVar: string, source: string): Series[] {
  const byLabel = new Map<string, Point[]>();
  for (const rec of records) {
    if (rec.sweepVar !== xVar) {
      throw new SchemaError(
        `${source}: expected sweep_var '${xVar}', found '${rec.sweepVar}'`,
      );
    }
    let points = byLabel.get(rec.estimator);
    if (points === undefined) {
      points = [];
      byLabel.set(rec.estimator, points);
    }
    if (Number.isFinite(rec.sweepValue) && Number.isFinite(rec.nmseDb)) {
      points.push({ x: rec.sweepValue, y: rec.nmseDb });
    }
  }
  const series: Series[] = [];
  for (const [label, points] of byLabel) {
    points.sort((a, b) => a.x - b.x);
    series.push({ label, points });
  }
  return series;
}
