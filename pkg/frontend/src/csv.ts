/**
 * Parsers for the two CSV formats produced by the benchmark harness.
 *
 * Cell values are kept both as parsed numbers (for geometry) and as raw
 * strings (for the annotation layer, which must echo source values verbatim).
 */

export interface TraceData {
  /** column name -> parsed numeric values */
  columns: Map<string, number[]>;
  /** column name -> raw cell strings, same order */
  raw: Map<string, string[]>;
  epochs: number[];
  abortedAt: number | null;
}

export function parseTraceCsv(text: string): TraceData {
  const lines = text.split("\n").filter((ln) => ln.trim().length > 0);
  if (lines.length === 0) throw new Error("empty trace CSV");
  const header = lines[0].split(",");
  const columns = new Map<string, number[]>(header.map((h) => [h, []]));
  const raw = new Map<string, string[]>(header.map((h) => [h, []]));
  let abortedAt: number | null = null;
  for (const line of lines.slice(1)) {
    if (line.startsWith("#")) {
      const m = line.match(/aborted epoch=(\d+)/);
      if (m) abortedAt = parseInt(m[1], 10);
      continue;
    }
    const cells = line.split(",");
    if (cells.length !== header.length) {
      throw new Error(`trace CSV row has ${cells.length} cells, expected ${header.length}`);
    }
    header.forEach((h, i) => {
      columns.get(h)!.push(parseFloat(cells[i]));
      raw.get(h)!.push(cells[i]);
    });
  }
  const epochs = columns.get("epoch");
  if (!epochs) throw new Error("trace CSV missing 'epoch' column");
  for (const required of ["running_avg_L", "running_avg_R", "L", "R"]) {
    if (!columns.has(required)) throw new Error(`trace CSV missing '${required}' column`);
  }
  return { columns, raw, epochs, abortedAt };
}

export interface SweepRow {
  values: Map<string, string>;
  index: number;
}

export interface SweepTable {
  header: string[];
  rows: SweepRow[];
  /** rows with a recorded oracle failure, excluded from plotting */
  failures: SweepRow[];
}

export function parseSweepCsv(text: string): SweepTable {
  const lines = text.split("\n").filter((ln) => ln.trim().length > 0);
  if (lines.length === 0) throw new Error("empty sweep CSV");
  const header = lines[0].split(",");
  for (const required of ["delta_L", "delta_R"]) {
    if (!header.includes(required)) throw new Error(`sweep CSV missing '${required}' column`);
  }
  const rows: SweepRow[] = [];
  const failures: SweepRow[] = [];
  lines.slice(1).forEach((line, i) => {
    const cells = line.split(",");
    const values = new Map(header.map((h, j) => [h, cells[j] ?? ""]));
    const row = { values, index: i };
    if ((values.get("error") ?? "") !== "") failures.push(row);
    else rows.push(row);
  });
  return { header, rows, failures };
}

/** Pick the swept game parameter: the numeric column that actually varies. */
export function sweptColumn(table: SweepTable): string {
  const candidates = ["B", "lam", "p", "sigma2", "n"];
  for (const col of candidates) {
    const vals = table.rows.map((r) => r.values.get(col) ?? "").filter((v) => v !== "");
    if (vals.length === table.rows.length && new Set(vals).size > 1) return col;
  }
  // fall back to the first candidate with any values, then to the row index
  for (const col of candidates) {
    if (table.rows.some((r) => (r.values.get(col) ?? "") !== "")) return col;
  }
  return "row";
}
