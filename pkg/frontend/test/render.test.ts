import * as fs from 'fs';
import * as os from 'os';
import * as path from 'path';
import { fileURLToPath } from 'url';

import { afterEach, expect, test } from 'vitest';

import {
  ManifestError, MissingSeriesError, PlotError, SchemaMismatchError,
} from '../src/errors.js';
import { FIGURE_KINDS } from '../src/figures.js';
import { asFigureKind, availableKinds, render, renderFigure } from '../src/render.js';

const FIXTURES = fileURLToPath(new URL('./fixtures', import.meta.url));
const FB = path.join(FIXTURES, 'fb-mini');
const SEP = path.join(FIXTURES, 'sep-mini');
const FLUX = path.join(FIXTURES, 'flux-mini');
const GAUGE = path.join(FIXTURES, 'gauge-mini');

const scratch: string[] = [];

function copyFixture(src: string): string {
  const dir = fs.mkdtempSync(path.join(os.tmpdir(), 'plotkit-'));
  scratch.push(dir);
  fs.cpSync(src, dir, { recursive: true });
  return dir;
}

afterEach(() => {
  for (const dir of scratch.splice(0)) {
    fs.rmSync(dir, { recursive: true, force: true });
  }
});

test('every figure kind renders from the fixtures', () => {
  const sources: Record<string, string> = {
    heatmap: SEP, timeseries: SEP, residuals: FB,
    phase_space: FLUX, convergence: GAUGE,
  };
  for (const kind of FIGURE_KINDS) {
    const svg = renderFigure(sources[kind], kind);
    expect(svg.startsWith('<svg ')).toBe(true);
    expect(svg.endsWith('</svg>\n')).toBe(true);
    expect(svg.length).toBeGreaterThan(500);
  }
});

test('rendering is deterministic', () => {
  for (const run of [FB, FLUX, GAUGE]) {
    expect(render(run)).toEqual(render(run));
  }
});

test('availableKinds reflects the manifest contents', () => {
  expect(availableKinds(FB)).toEqual(['heatmap', 'timeseries', 'residuals']);
  expect(availableKinds(FLUX)).toEqual(['heatmap', 'timeseries', 'residuals', 'phase_space']);
  expect(availableKinds(GAUGE)).toEqual(['heatmap', 'timeseries', 'residuals', 'convergence']);
});

test('render with no kind list covers everything the run provides', () => {
  const images = render(FLUX);
  expect(Object.keys(images)).toEqual(availableKinds(FLUX));
});

test('heatmap draws the spin density with a title and cells', () => {
  const svg = renderFigure(SEP, 'heatmap');
  expect(svg).toContain('spin density rho_z(x, t) - spin_separation');
  expect((svg.match(/<rect /g) ?? []).length).toBeGreaterThan(300);
});

test('timeseries picks the per-sector series when present', () => {
  const fromSectors = renderFigure(SEP, 'timeseries');
  expect(fromSectors).toContain('sector +');
  expect(fromSectors).toContain('total');
  const fromGauge = renderFigure(GAUGE, 'timeseries');
  expect(fromGauge).toContain('sector + (effective)');
  const fallback = renderFigure(FB, 'timeseries');
  expect(fallback).toContain('mean momentum');
});

test('residual curve carries the tolerance line', () => {
  const svg = renderFigure(FB, 'residuals');
  expect(svg).toContain('force-balance residual - force_balance');
  expect(svg).toContain('tolerance 0.001');
  expect(svg).toContain('stroke-dasharray');
});

test('phase-space figure shows the final frame time', () => {
  const svg = renderFigure(FLUX, 'phase_space');
  expect(svg).toContain('Wigner density w0(x, p) at t = 0.08 - flux_source');
});

test('convergence figure marks each measurement rate', () => {
  const svg = renderFigure(GAUGE, 'convergence');
  expect(svg).toContain('gauge-sector convergence - gauge_limit');
  expect((svg.match(/<circle /g) ?? []).length).toBe(4);
  expect(svg).toContain('coherence floor');
});

test('requesting a series the run does not provide is a named error', () => {
  expect(() => renderFigure(FB, 'convergence')).toThrowError(MissingSeriesError);
  expect(() => renderFigure(FB, 'phase_space')).toThrowError(MissingSeriesError);
});

test('an empty run directory raises the manifest error', () => {
  const dir = fs.mkdtempSync(path.join(os.tmpdir(), 'plotkit-'));
  scratch.push(dir);
  expect(() => render(dir)).toThrowError(ManifestError);
});

test('a tampered header is refused with the schema error', () => {
  const dir = copyFixture(FB);
  const file = path.join(dir, 'residuals.csv');
  const text = fs.readFileSync(file, 'ascii').replace('t,dpdt,force,residual',
    't,slope,force,residual');
  fs.writeFileSync(file, text);
  expect(() => renderFigure(dir, 'residuals')).toThrowError(SchemaMismatchError);
  expect(() => renderFigure(dir, 'residuals')).toThrowError(/documented schema/);
});

test('a corrupted cell is refused with the schema error', () => {
  const dir = copyFixture(GAUGE);
  const file = path.join(dir, 'convergence.csv');
  const lines = fs.readFileSync(file, 'ascii').split('\n');
  lines[1] = lines[1].replace(/^[^,]*/, 'oops');
  fs.writeFileSync(file, lines.join('\n'));
  expect(() => renderFigure(dir, 'convergence')).toThrowError(/cannot parse "oops"/);
});

test('a non-rectangular snapshot table is refused', () => {
  const dir = copyFixture(FB);
  const file = path.join(dir, 'snapshots.csv');
  const lines = fs.readFileSync(file, 'ascii').trimEnd().split('\n');
  lines.pop();
  fs.writeFileSync(file, lines.join('\n') + '\n');
  expect(() => renderFigure(dir, 'heatmap')).toThrowError(/rectangular/);
});

test('unknown kind names are rejected up front', () => {
  expect(() => asFigureKind('histogram')).toThrowError(PlotError);
  expect(() => asFigureKind('histogram')).toThrowError(/known kinds/);
});
