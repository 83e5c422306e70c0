/**
 * Render the figure families from sweep output:
 *
 *   node dist/cli.js --csv-glob "out/trajectory_*.csv" --frontier out/frontier.csv --out figs
 *
 * Writes loss_vs_time.svg, info_plane.svg and time_panel.svg into --out.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import { SchemaError, frontierFromCsv, trajectoryFromCsv } from "./csv.js";
import { renderInfoPlane, renderLossFigure, renderTimePanel } from "./figures.js";

function parseArgs(argv: string[]): Record<string, string> {
  const out: Record<string, string> = {};
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i];
    const value = argv[i + 1];
    if (!key?.startsWith("--") || value === undefined) {
      throw new Error(`malformed arguments near ${key ?? "(end)"}`);
    }
    out[key.slice(2)] = value;
  }
  for (const required of ["csv-glob", "frontier", "out"]) {
    if (!(required in out)) throw new Error(`missing required flag --${required}`);
  }
  return out;
}

/** Expand a single-directory glob like out/trajectory_*.csv (no ** support). */
export function expandGlob(pattern: string): string[] {
  const dir = path.dirname(pattern);
  const base = path.basename(pattern);
  const regex = new RegExp(
    "^" + base.replace(/[.+^${}()|[\]\\]/g, "\\$&").replace(/\*/g, ".*").replace(/\?/g, ".") + "$"
  );
  if (!fs.existsSync(dir)) return [];
  return fs
    .readdirSync(dir)
    .filter((name) => regex.test(name))
    .sort()
    .map((name) => path.join(dir, name));
}

export function main(argv: string[]): number {
  let args: Record<string, string>;
  try {
    args = parseArgs(argv);
  } catch (err) {
    console.error(String(err instanceof Error ? err.message : err));
    return 1;
  }
  const files = expandGlob(args["csv-glob"]);
  if (files.length === 0) {
    console.error(`no CSV files match ${args["csv-glob"]}`);
    return 1;
  }
  try {
    const trajectories = files.map((file) =>
      trajectoryFromCsv(path.basename(file), fs.readFileSync(file, "utf8"))
    );
    const frontier = frontierFromCsv(fs.readFileSync(args.frontier, "utf8"));
    fs.mkdirSync(args.out, { recursive: true });
    const outputs: [string, string][] = [
      ["loss_vs_time.svg", renderLossFigure(trajectories)],
      ["info_plane.svg", renderInfoPlane(trajectories, frontier)],
      ["time_panel.svg", renderTimePanel(trajectories)],
    ];
    for (const [name, svg] of outputs) {
      const target = path.join(args.out, name);
      fs.writeFileSync(target, svg);
      console.log(`wrote ${target}`);
    }
  } catch (err) {
    if (err instanceof SchemaError) {
      console.error(`schema error: ${err.message}`);
      return 1;
    }
    throw err;
  }
  return 0;
}

if (process.argv[1] && process.argv[1].endsWith("cli.js")) {
  process.exit(main(process.argv.slice(2)));
}
