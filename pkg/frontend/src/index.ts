export { REQUIRED_COLUMNS, SchemaError, parseRecords } from "./schema";
export type { ColumnName, SweepRecord } from "./schema";
export { toSeries } from "./series";
export type { Point, Series } from "./series";
export { styleFor } from "./style";
export type { LineStyle, MarkerShape } from "./style";
export { niceTicks, renderChart } from "./chart";
export type { ChartOptions, TickSet, VerticalMarker } from "./chart";
export { PRESETS, PRESET_NAMES, renderFigure, renderFigureFile } from "./figures";
export type { FigureSpec } from "./figures";
export { main } from "./cli";
