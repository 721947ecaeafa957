import * as fs from 'fs';
import * as os from 'os';
import * as path from 'path';
import { fileURLToPath } from 'url';

import { afterEach, beforeEach, expect, test, vi } from 'vitest';

import { cliMain } from '../src/cli.js';

const FIXTURES = fileURLToPath(new URL('./fixtures', import.meta.url));
const FB = path.join(FIXTURES, 'fb-mini');
const FLUX = path.join(FIXTURES, 'flux-mini');

const scratch: string[] = [];
let logs: string[];
let errors: string[];

function tmpDir(): string {
  const dir = fs.mkdtempSync(path.join(os.tmpdir(), 'plotkit-'));
  scratch.push(dir);
  return dir;
}

beforeEach(() => {
  logs = [];
  errors = [];
  vi.spyOn(console, 'log').mockImplementation((msg) => logs.push(String(msg)));
  vi.spyOn(console, 'error').mockImplementation((msg) => errors.push(String(msg)));
});

afterEach(() => {
  vi.restoreAllMocks();
  for (const dir of scratch.splice(0)) {
    fs.rmSync(dir, { recursive: true, force: true });
  }
});

function listDir(dir: string): string[] {
  return fs.readdirSync(dir).sort()
    .map((f) => `${f}:${fs.statSync(path.join(dir, f)).size}`);
}

test('renders every available kind into the output directory', () => {
  const out = tmpDir();
  expect(cliMain([FLUX, '--out', out])).toBe(0);
  expect(fs.readdirSync(out).sort()).toEqual([
    'heatmap.svg', 'phase_space.svg', 'residuals.svg', 'timeseries.svg',
  ]);
  const svg = fs.readFileSync(path.join(out, 'heatmap.svg'), 'utf8');
  expect(svg.startsWith('<svg ')).toBe(true);
  expect(logs.some((line) => line.includes('heatmap.svg'))).toBe(true);
});

test('never writes into the run directory', () => {
  const before = listDir(FB);
  const out = tmpDir();
  expect(cliMain([FB, '--out', out])).toBe(0);
  expect(listDir(FB)).toEqual(before);
});

test('refuses an output directory inside the run directory', () => {
  expect(cliMain([FB, '--out', FB])).toBe(1);
  expect(cliMain([FB, '--out', path.join(FB, 'figs')])).toBe(1);
  expect(errors.some((line) => line.includes('refusing to write'))).toBe(true);
});

test('--kinds limits the output, comma or space separated', () => {
  const out = tmpDir();
  expect(cliMain([FB, '--kinds', 'residuals', '--out', out])).toBe(0);
  expect(fs.readdirSync(out)).toEqual(['residuals.svg']);

  const out2 = tmpDir();
  expect(cliMain([FB, '--kinds', 'heatmap,timeseries', '--out', out2])).toBe(0);
  expect(fs.readdirSync(out2).sort()).toEqual(['heatmap.svg', 'timeseries.svg']);

  const out3 = tmpDir();
  expect(cliMain([FB, '--kinds', 'heatmap', 'residuals', '--out', out3])).toBe(0);
  expect(fs.readdirSync(out3).sort()).toEqual(['heatmap.svg', 'residuals.svg']);
});

test('a kind the run cannot supply surfaces the named error', () => {
  const out = tmpDir();
  expect(cliMain([FB, '--kinds', 'convergence', '--out', out])).toBe(1);
  expect(errors.some((line) => line.startsWith('MissingSeriesError:'))).toBe(true);
  expect(fs.readdirSync(out)).toEqual([]);
});

test('an empty run directory surfaces the manifest error', () => {
  expect(cliMain([tmpDir(), '--out', tmpDir()])).toBe(1);
  expect(errors.some((line) => line.startsWith('ManifestError:'))).toBe(true);
});

test('usage problems exit with code 1 and print usage', () => {
  expect(cliMain([])).toBe(1);
  expect(cliMain([FB, '--kinds', 'histogram'])).toBe(1);
  expect(cliMain([FB, '--nope'])).toBe(1);
  expect(errors.some((line) => line.includes('usage: plot'))).toBe(true);
});

test('--help prints usage and succeeds', () => {
  expect(cliMain(['--help'])).toBe(0);
  expect(logs.some((line) => line.includes('usage: plot'))).toBe(true);
});
