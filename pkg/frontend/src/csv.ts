// Strict reader for the CSV artifacts a run directory contains.
//
// The producing side writes a single header row followed by float cells,
// so anything else is treated as a schema violation: the header must match
// the documented column list exactly (names and order), every row must
// have the same width, and every cell must parse as a finite number.

import * as fs from 'fs';

import { SchemaMismatchError } from './errors.js';

export interface Table {
  /** Column names, identical to the documented schema. */
  names: string[];
  /** One numeric array per column, all of equal length. */
  columns: number[][];
  /** Number of data rows. */
  rows: number;
}

/** Parse CSV text against an exact expected header. `label` names the source in errors. */
export function parseCsv(text: string, label: string, expected: readonly string[]): Table {
  const lines = text.split('\n');
  while (lines.length > 0 && lines[lines.length - 1].trim() === '') {
    lines.pop();
  }
  if (lines.length === 0) {
    throw new SchemaMismatchError(`${label}: empty file`);
  }

  const names = lines[0].trim().split(',');
  if (names.length !== expected.length || names.some((n, i) => n !== expected[i])) {
    throw new SchemaMismatchError(
      `${label}: header [${names.join(', ')}] does not match the documented ` +
      `schema [${expected.join(', ')}]`
    );
  }
  if (lines.length === 1) {
    throw new SchemaMismatchError(`${label}: no data rows`);
  }

  const columns: number[][] = names.map(() => []);
  for (let i = 1; i < lines.length; i++) {
    const cells = lines[i].trim().split(',');
    if (cells.length !== names.length) {
      throw new SchemaMismatchError(
        `${label}: row ${i} has ${cells.length} cells, expected ${names.length}`
      );
    }
    for (let j = 0; j < cells.length; j++) {
      const value = cells[j] === '' ? NaN : Number(cells[j]);
      if (!Number.isFinite(value)) {
        throw new SchemaMismatchError(
          `${label}: row ${i}, column ${names[j]}: cannot parse ${JSON.stringify(cells[j])} as a number`
        );
      }
      columns[j].push(value);
    }
  }
  return { names, columns, rows: lines.length - 1 };
}

/** Read and parse one CSV file against its documented schema. */
export function readTable(filePath: string, expected: readonly string[]): Table {
  const text = fs.readFileSync(filePath, 'ascii');
  return parseCsv(text, filePath, expected);
}

/** Column accessor; names were validated against the schema, so lookup cannot fail. */
export function col(table: Table, name: string): number[] {
  return table.columns[table.names.indexOf(name)];
}
