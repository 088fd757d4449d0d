#!/usr/bin/env node
/**
 * Command line: `render <spec-or-preset> [--csv path] [--out path]`.
 * The target is a preset name, a JSON figure-spec file, or `all` to
 * regenerate every preset from a CSV directory.
 */
import * as fs from "fs";
import * as path from "path";

import yargs from "yargs";
import { z } from "zod";

import { FigureSpec, PRESETS, PRESET_NAMES, renderFigureFile } from "./figures";
import { SchemaError } from "./schema";

const markerEnum = z.enum(["circle", "square", "diamond", "triangle", "none"]);

const specSchema = z
  .object({
    name: z.string().default("figure"),
    title: z.string(),
    xVar: z.string(),
    xLabel: z.string(),
    yLabel: z.string().optional(),
    markerEvery: z.number().int().nonnegative().optional(),
    styles: z
      .record(
        z.object({
          color: z.string().optional(),
          dash: z.string().optional(),
          marker: markerEnum.optional(),
        }),
      )
      .optional(),
    verticalMarkers: z
      .array(z.object({ x: z.number(), label: z.string().optional() }))
      .optional(),
    csv: z.string().optional(),
    out: z.string().optional(),
  })
  .strict();

interface Args {
  target: string;
  csv?: string;
  out?: string;
  csvDir: string;
  outDir: string;
  quiet: boolean;
}

function parseArgs(argv: string[]): Args | null {
  const parsed = yargs(argv)
    .scriptName("render")
    .usage("$0 <spec-or-preset> [options]")
    .command("$0 <target>", "render a figure preset, a JSON spec, or all presets")
    .positional("target", {
      type: "string",
      describe: `preset name (${PRESET_NAMES.join(", ")}), JSON spec file, or 'all'`,
    })
    .option("csv", { type: "string", describe: "input CSV path" })
    .option("out", { type: "string", describe: "output SVG path" })
    .option("csv-dir", {
      type: "string",
      default: "testdata",
      describe: "CSV directory for 'all' and for presets without --csv",
    })
    .option("out-dir", {
      type: "string",
      default: "figures",
      describe: "output directory for 'all'",
    })
    .option("quiet", { type: "boolean", default: false })
    .strict()
    .exitProcess(false)
    .fail((msg) => {
      throw new Error(msg);
    })
    .help();
  const a = parsed.parseSync();
  return {
    target: String(a.target),
    csv: a.csv,
    out: a.out,
    csvDir: String(a["csv-dir"]),
    outDir: String(a["out-dir"]),
    quiet: Boolean(a.quiet),
  };
}

function loadSpecFile(file: string): FigureSpec {
  let raw: unknown;
  try {
    raw = JSON.parse(fs.readFileSync(file, "utf-8"));
  } catch (err) {
    throw new SchemaError(`${file}: ${(err as Error).message}`);
  }
  const checked = specSchema.safeParse(raw);
  if (!checked.success) {
    const first = checked.error.issues[0]!;
    const where = first.path.length > 0 ? `${first.path.join(".")}: ` : "";
    throw new SchemaError(`${file}: invalid figure spec: ${where}${first.message}`);
  }
  return checked.data;
}

function renderOne(spec: FigureSpec, args: Args): string {
  const csvPath = args.csv ?? spec.csv ?? path.join(args.csvDir, `${spec.name}.csv`);
  const outPath = args.out ?? spec.out ?? `${spec.name}.svg`;
  renderFigureFile(spec, csvPath, outPath);
  return outPath;
}

export function main(argv: string[]): number {
  let args: Args | null;
  try {
    args = parseArgs(argv);
  } catch (err) {
    console.error(`render: ${(err as Error).message}`);
    return 1;
  }
  if (args === null) return 0;

  try {
    if (args.target === "all") {
      for (const name of PRESET_NAMES) {
        const spec = PRESETS[name]!;
        const csvPath = path.join(args.csvDir, `${name}.csv`);
        const outPath = path.join(args.outDir, `${name}.svg`);
        renderFigureFile(spec, csvPath, outPath);
        if (!args.quiet) console.log(`wrote ${outPath}`);
      }
      return 0;
    }
    let spec: FigureSpec;
    if (args.target in PRESETS) {
      spec = PRESETS[args.target]!;
    } else if (args.target.endsWith(".json") || fs.existsSync(args.target)) {
      spec = loadSpecFile(args.target);
    } else {
      console.error(
        `render: unknown preset '${args.target}' (have ${PRESET_NAMES.join(", ")})`,
      );
      return 1;
    }
    const outPath = renderOne(spec, args);
    if (!args.quiet) console.log(`wrote ${outPath}`);
    return 0;
  } catch (err) {
    if (err instanceof SchemaError) {
      console.error(`render: ${err.message}`);
      return 1;
    }
    if ((err as NodeJS.ErrnoException).code === "ENOENT") {
      console.error(`render: cannot read ${(err as NodeJS.ErrnoException).path}`);
      return 1;
    }
    throw err;
  }
}

if (require.main === module) {
  process.exitCode = main(process.argv.slice(2));
}
