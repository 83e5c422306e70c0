/**
 * Trajectory CSV loading and schema validation.
 *
 * The files are plain comma-separated tables with a fixed header emitted by
 * the sweep runner; a schema mismatch is reported as an explicit column diff
 * rather than a generic parse error.
 */

export const TRAJECTORY_COLUMNS = [
  "tau",
  "train_loss",
  "test_loss",
  "izy_lower",
  "izx_lower",
  "izx_upper",
  "izd_upper",
  "fisher_trace",
  "path_length_bound",
  "itheta_d",
  "ditheta_d_dtau",
  "degeneracy_flags",
] as const;

export type TrajectoryColumn = (typeof TRAJECTORY_COLUMNS)[number];

export interface Table {
  columns: string[];
  rows: number[][];
}

export class SchemaError extends Error {}

export function parseCsv(text: string): Table {
  const lines = text.split(/\r?\n/).filter((line) => line.trim().length > 0);
  if (lines.length < 2) {
    throw new SchemaError("CSV has no data rows");
  }
  const columns = lines[0].split(",").map((c) => c.trim());
  const rows = lines.slice(1).map((line, i) => {
    const cells = line.split(",").map(Number);
    if (cells.length !== columns.length || cells.some(Number.isNaN)) {
      throw new SchemaError(`malformed CSV row ${i + 2}`);
    }
    return cells;
  });
  return { columns, rows };
}

/** Validate against an expected header; the error lists both directions of the diff. */
export function checkSchema(table: Table, expected: readonly string[]): void {
  const have = new Set(table.columns);
  const want = new Set(expected);
  const missing = expected.filter((c) => !have.has(c));
  const unexpected = table.columns.filter((c) => !want.has(c));
  const ordered =
    missing.length === 0 &&
    unexpected.length === 0 &&
    table.columns.every((c, i) => c === expected[i]);
  if (!ordered) {
    throw new SchemaError(
      `column schema mismatch; missing: [${missing.join(", ")}], ` +
        `unexpected: [${unexpected.join(", ")}], ` +
        `expected order: [${expected.join(", ")}]`
    );
  }
}

export interface Trajectory {
  /** swept weight variance, parsed from the file name */
  weightVariance: number;
  column(name: TrajectoryColumn): number[];
}

export function trajectoryFromCsv(name: string, text: string): Trajectory {
  const table = parseCsv(text);
  checkSchema(table, TRAJECTORY_COLUMNS);
  const match = name.match(/wv([0-9.eE+-]+)\.csv$/);
  const weightVariance = match ? Number(match[1]) : NaN;
  return {
    weightVariance,
    column(colName: TrajectoryColumn): number[] {
      const idx = TRAJECTORY_COLUMNS.indexOf(colName);
      return table.rows.map((r) => r[idx]);
    },
  };
}

export interface FrontierTable {
  izx: number[];
  izy: number[];
}

export function frontierFromCsv(text: string): FrontierTable {
  const table = parseCsv(text);
  checkSchema(table, ["izx", "izy"]);
  return {
    izx: table.rows.map((r) => r[0]),
    izy: table.rows.map((r) => r[1]),
  };
}
