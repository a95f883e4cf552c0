/**
 * Strict CSV access: the header must match the documented schema exactly
 * (order included). Missing or extra columns abort with the offending file
 * and column named; trailing `#` comment lines (provenance footers) are
 * kept aside, never parsed as data.
 */

import * as fs from "node:fs";

export class SchemaError extends Error {
  constructor(
    public readonly file: string,
    public readonly column: string,
    detail: string
  ) {
    super(`schema error in ${file}: column '${column}': ${detail}`);
    this.name = "SchemaError";
  }
}

export interface Table {
  file: string;
  header: string[];
  rows: string[][];
  comments: string[];
}

export function parseCsv(file: string, text: string, expected: readonly string[]): Table {
  const lines = text.split(/\r?\n/).filter((line) => line.length > 0);
  if (lines.length === 0) {
    throw new SchemaError(file, expected[0] ?? "?", "file is empty");
  }
  const header = lines[0].split(",");
  for (const col of expected) {
    if (!header.includes(col)) {
      throw new SchemaError(file, col, "missing from header");
    }
  }
  for (const col of header) {
    if (!expected.includes(col)) {
      throw new SchemaError(file, col, "not in the documented schema");
    }
  }
  for (let i = 0; i < expected.length; i++) {
    if (header[i] !== expected[i]) {
      throw new SchemaError(file, expected[i], `expected at position ${i}, found '${header[i]}'`);
    }
  }
  const rows: string[][] = [];
  const comments: string[] = [];
  for (const line of lines.slice(1)) {
    if (line.startsWith("#")) {
      comments.push(line);
      continue;
    }
    const cells = line.split(",");
    if (cells.length !== header.length) {
      throw new SchemaError(
        file,
        header[Math.min(cells.length, header.length) - 1] ?? "?",
        `row has ${cells.length} cells, header has ${header.length}`
      );
    }
    rows.push(cells);
  }
  return { file, header, rows, comments };
}

export function readCsv(path: string, expected: readonly string[]): Table {
  const text = fs.readFileSync(path, "utf8");
  const name = path.split("/").pop() ?? path;
  return parseCsv(name, text, expected);
}

export function column(table: Table, name: string): string[] {
  const idx = table.header.indexOf(name);
  if (idx < 0) throw new SchemaError(table.file, name, "missing from header");
  return table.rows.map((r) => r[idx]);
}

export function numericColumn(table: Table, name: string): number[] {
  return column(table, name).map((cell, i) => {
    const v = Number(cell);
    if (cell === "" || Number.isNaN(v)) {
      throw new SchemaError(table.file, name, `row ${i + 1} value '${cell}' is not numeric`);
    }
    return v;
  });
}
