/** Readers for the simulator CLI's file outputs (CSV with `# key=value`
 *  meta lines, JSON blobs carrying a `config_sha256` stamp). */

import fs from "node:fs";

export interface Table {
  path: string;
  meta: Record<string, string>;
  columns: string[];
  rows: string[][];
}

export function readTable(path: string): Table {
  if (!fs.existsSync(path)) throw new Error(`input not found: ${path}`);
  const lines = fs.readFileSync(path, "utf8").trim().split("\n");
  const meta: Record<string, string> = {};
  let i = 0;
  for (; i < lines.length && lines[i].startsWith("#"); i++) {
    const body = lines[i].replace(/^#\s*/, "");
    const eq = body.indexOf("=");
    if (eq > 0) meta[body.slice(0, eq)] = body.slice(eq + 1);
  }
  if (i >= lines.length) throw new Error(`no header row in ${path}`);
  const columns = lines[i].split(",");
  const rows = lines.slice(i + 1).map((l) => l.split(","));
  return { path, meta, columns, rows };
}

/** Numeric column by name; empty cells become NaN. */
export function col(table: Table, name: string): number[] {
  const j = table.columns.indexOf(name);
  if (j < 0) {
    throw new Error(`missing column ${name} in ${table.path} ` +
      `(have: ${table.columns.join(", ")})`);
  }
  return table.rows.map((r) => (r[j] === "" ? NaN : Number(r[j])));
}

export function strCol(table: Table, name: string): string[] {
  const j = table.columns.indexOf(name);
  if (j < 0) throw new Error(`missing column ${name} in ${table.path}`);
  return table.rows.map((r) => r[j]);
}

export function readJson(path: string): any {
  if (!fs.existsSync(path)) throw new Error(`input not found: ${path}`);
  return JSON.parse(fs.readFileSync(path, "utf8"));
}

/** The config hash stamped into every simulator output. */
export function configHash(source: Table | any, path?: string): string {
  const hash = "meta" in source && source.meta
    ? source.meta["config_sha256"]
    : source["config_sha256"];
  if (!hash) throw new Error(`no config_sha256 in ${path ?? source.path}`);
  return hash;
}

/** Overlaid inputs must all come from the same resolved config. */
export function assertSameHash(items: { path: string; hash: string }[]): void {
  const distinct = new Set(items.map((it) => it.hash));
  if (distinct.size > 1) {
    const listing = items.map((it) => `  ${it.path}: ${it.hash}`).join("\n");
    throw new Error(`config hash mismatch between overlaid inputs:\n${listing}`);
  }
}
