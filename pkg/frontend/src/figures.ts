// The standard figure set.
//
// Each figure kind declares which run artifacts it reads, the documented
// column schema of those files, and how the data is drawn. Everything is
// read-only: renderers take a run directory plus its manifest and return
// an SVG string.

import { col, readTable } from './csv.js';
import { MissingSeriesError, SchemaMismatchError } from './errors.js';
import { requireArtifact, RunManifest } from './manifest.js';
import {
  AxisSpec, axes, COLORS, colorbar, divergingColor, fmtTick, Frame, legend,
  polyline, px, svgClose, svgOpen,
} from './svg.js';

export const FIGURE_KINDS = [
  'heatmap', 'timeseries', 'residuals', 'phase_space', 'convergence',
] as const;

export type FigureKind = (typeof FIGURE_KINDS)[number];

export interface FigureSpec {
  kind: FigureKind;
  /** Artifact keys this figure can read; the first one present is used. */
  inputs: string[];
  /** Axis labels (natural units throughout: hbar = 1, box coordinates). */
  xLabel: string;
  yLabel: string;
  /** Default output file name. */
  output: string;
}

export const FIGURES: Record<FigureKind, FigureSpec> = {
  heatmap: {
    kind: 'heatmap', inputs: ['snapshots'],
    xLabel: 'position x', yLabel: 'time t', output: 'heatmap.svg',
  },
  timeseries: {
    kind: 'timeseries', inputs: ['sectors', 'sectors_effective', 'observables'],
    xLabel: 'time t', yLabel: 'momentum', output: 'timeseries.svg',
  },
  residuals: {
    kind: 'residuals', inputs: ['residuals'],
    xLabel: 'time t', yLabel: 'relative residual', output: 'residuals.svg',
  },
  phase_space: {
    kind: 'phase_space', inputs: ['phase_space'],
    xLabel: 'position x', yLabel: 'momentum p', output: 'phase_space.svg',
  },
  convergence: {
    kind: 'convergence', inputs: ['convergence'],
    xLabel: 'measurement rate nu', yLabel: 'deviation', output: 'convergence.svg',
  },
};

/** Column schemas of the producing side, used to refuse mismatched files. */
export const SCHEMAS: Record<string, readonly string[]> = {
  observables: ['t', 'trace', 'purity', 'mean_x', 'mean_p', 'p_squared',
    'spin_x', 'spin_y', 'spin_z', 'corr_pz', 'force'],
  residuals: ['t', 'dpdt', 'force', 'residual'],
  snapshots: ['t', 'x', 'rho0', 'rho_x', 'rho_y', 'rho_z'],
  phase_space: ['t', 'x', 'p', 'rho0', 'rho_x', 'rho_y', 'rho_z'],
  sectors: ['t', 'total_p', 'corr_pz', 'sector_p_plus', 'sector_p_minus',
    'weight_plus', 'weight_minus', 'delta_p', 'pointer_p_plus', 'pointer_p_minus'],
  sectors_effective: ['t', 'sector', 'norm', 'mean_x', 'p_kinetic'],
  convergence: ['nu', 'delta', 'coherence_floor'],
};

// ---------- shared helpers ----------

/** Start index and time of each constant-t block in a frame-major table. */
function frameStarts(t: number[]): { starts: number[]; times: number[] } {
  const starts = [0];
  const times = [t[0]];
  for (let i = 1; i < t.length; i++) {
    if (t[i] !== t[i - 1]) {
      starts.push(i);
      times.push(t[i]);
    }
  }
  return { starts, times };
}

/** Frame length of a rectangular frame-major table, or a schema error. */
function frameLength(file: string, starts: number[], rows: number): number {
  const size = (starts.length > 1 ? starts[1] : rows) - starts[0];
  for (let i = 0; i < starts.length; i++) {
    const end = i + 1 < starts.length ? starts[i + 1] : rows;
    if (end - starts[i] !== size) {
      throw new SchemaMismatchError(`${file}: snapshot frames are not a rectangular grid`);
    }
  }
  return size;
}

function extent(values: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  return [lo, hi];
}

function padded(lo: number, hi: number): [number, number] {
  const pad = (hi - lo || Math.max(1, Math.abs(hi))) * 0.08;
  return [lo - pad, hi + pad];
}

function maxAbs(values: number[]): number {
  let m = 0;
  for (const v of values) {
    const a = Math.abs(v);
    if (a > m) m = a;
  }
  return m;
}

interface Series {
  label: string;
  color: string;
  t: number[];
  y: number[];
}

function linePlot(frame: Frame, x: AxisSpec, y: AxisSpec, title: string,
                  series: Series[], markers = false): string {
  const { svg: frameSvg, sx, sy } = axes(frame, x, y, title);
  let svg = svgOpen(frame.width, frame.height) + frameSvg;
  for (const s of series) {
    svg += polyline(s.t.map((v, i) => [sx(v), sy(s.y[i])] as [number, number]), s.color);
    if (markers) {
      for (let i = 0; i < s.t.length; i++) {
        svg += `<circle cx="${px(sx(s.t[i]))}" cy="${px(sy(s.y[i]))}" r="3.5" ` +
          `fill="${s.color}"/>\n`;
      }
    }
  }
  svg += legend(frame, series);
  return svg + svgClose();
}

/** Grid of colored cells plus a diverging colorbar. */
function cellPlot(frame: Frame, x: AxisSpec, y: AxisSpec, title: string,
                  xs: number[], ys: number[],
                  value: (xi: number, yi: number) => number): string {
  const { svg: frameSvg, sx, sy } = axes(frame, x, y, title, false);
  let svg = svgOpen(frame.width, frame.height);

  let scale = 0;
  for (let yi = 0; yi < ys.length; yi++) {
    for (let xi = 0; xi < xs.length; xi++) {
      scale = Math.max(scale, Math.abs(value(xi, yi)));
    }
  }
  if (scale === 0) scale = 1;

  const dx = xs.length > 1 ? xs[1] - xs[0] : 1;
  const dy = ys.length > 1 ? ys[1] - ys[0] : 1;
  for (let yi = 0; yi < ys.length; yi++) {
    for (let xi = 0; xi < xs.length; xi++) {
      const left = sx(xs[xi] - dx / 2);
      const top = sy(ys[yi] + dy / 2);
      const w = sx(xs[xi] + dx / 2) - left;
      const h = sy(ys[yi] - dy / 2) - top;
      svg += `<rect x="${px(left)}" y="${px(top)}" width="${px(w + 0.3)}" ` +
        `height="${px(h + 0.3)}" fill="${divergingColor(value(xi, yi) / scale)}"/>\n`;
    }
  }

  svg += frameSvg;
  const plotH = frame.height - frame.margin.top - frame.margin.bottom;
  svg += colorbar(frame.width - frame.margin.right + 14, frame.margin.top, plotH, scale);
  return svg + svgClose();
}

// ---------- the five figure kinds ----------

function renderHeatmap(runDir: string, manifest: RunManifest): string {
  const file = requireArtifact(runDir, manifest, 'snapshots');
  const tab = readTable(file, SCHEMAS.snapshots);
  const t = col(tab, 't');
  const x = col(tab, 'x');
  const rhoZ = col(tab, 'rho_z');

  const { starts, times } = frameStarts(t);
  const nx = frameLength(file, starts, tab.rows);
  const xs = x.slice(0, nx);
  const dx = xs.length > 1 ? xs[1] - xs[0] : 1;
  const dt = times.length > 1 ? times[1] - times[0] : 1;

  const frame: Frame = {
    width: 720, height: 440,
    margin: { top: 40, right: 90, bottom: 50, left: 70 },
  };
  return cellPlot(
    frame,
    { label: FIGURES.heatmap.xLabel, domain: [xs[0] - dx / 2, xs[nx - 1] + dx / 2] },
    { label: FIGURES.heatmap.yLabel, domain: [times[0] - dt / 2, times[times.length - 1] + dt / 2] },
    `spin density rho_z(x, t) - ${manifest.scenario}`,
    xs, times,
    (xi, yi) => rhoZ[starts[yi] + xi],
  );
}

function renderTimeseries(runDir: string, manifest: RunManifest): string {
  const key = FIGURES.timeseries.inputs.find((k) => manifest.artifacts[k] !== undefined);
  if (key === undefined) {
    throw new MissingSeriesError(
      `${runDir}: no momentum series (needs one of ${FIGURES.timeseries.inputs.join(', ')})`
    );
  }
  const file = requireArtifact(runDir, manifest, key);
  const tab = readTable(file, SCHEMAS[key]);

  let series: Series[];
  if (key === 'sectors') {
    series = [
      { label: 'sector +', color: COLORS.blue, t: col(tab, 't'), y: col(tab, 'sector_p_plus') },
      { label: 'sector -', color: COLORS.red, t: col(tab, 't'), y: col(tab, 'sector_p_minus') },
      { label: 'total', color: COLORS.gray, t: col(tab, 't'), y: col(tab, 'total_p') },
    ];
  } else if (key === 'sectors_effective') {
    const t = col(tab, 't');
    const sector = col(tab, 'sector');
    const p = col(tab, 'p_kinetic');
    series = [1, -1].map((s) => ({
      label: s > 0 ? 'sector + (effective)' : 'sector - (effective)',
      color: s > 0 ? COLORS.blue : COLORS.red,
      t: t.filter((_, i) => sector[i] === s),
      y: p.filter((_, i) => sector[i] === s),
    }));
  } else {
    series = [
      { label: 'mean momentum', color: COLORS.blue, t: col(tab, 't'), y: col(tab, 'mean_p') },
      { label: 'p sigma_z correlator', color: COLORS.red, t: col(tab, 't'), y: col(tab, 'corr_pz') },
    ];
  }

  const [tLo, tHi] = extent(series[0].t);
  const [yLo, yHi] = extent(series.flatMap((s) => s.y));
  const frame: Frame = {
    width: 680, height: 400,
    margin: { top: 40, right: 170, bottom: 50, left: 70 },
  };
  return linePlot(
    frame,
    { label: FIGURES.timeseries.xLabel, domain: [tLo, tHi] },
    { label: FIGURES.timeseries.yLabel, domain: padded(yLo, yHi) },
    `momentum per sector - ${manifest.scenario}`,
    series,
  );
}

const RESIDUAL_TOLERANCE = 1e-3;
const RESIDUAL_CLAMP = 1e-16;

function renderResiduals(runDir: string, manifest: RunManifest): string {
  const file = requireArtifact(runDir, manifest, 'residuals');
  const tab = readTable(file, SCHEMAS.residuals);
  const t = col(tab, 't');
  const residual = col(tab, 'residual');

  // Force scale for the relative residual; fall back when the net force is zero.
  const scale = maxAbs(col(tab, 'force')) || maxAbs(col(tab, 'dpdt')) || 1;
  const rel = residual.map((r) => Math.max(r / scale, RESIDUAL_CLAMP));

  const [rLo, rHi] = extent(rel);
  const yLo = Math.pow(10, Math.floor(Math.log10(Math.min(rLo, RESIDUAL_TOLERANCE))));
  const yHi = Math.pow(10, Math.ceil(Math.log10(Math.max(rHi, RESIDUAL_TOLERANCE))));
  const frame: Frame = {
    width: 680, height: 400,
    margin: { top: 40, right: 170, bottom: 50, left: 70 },
  };
  const x: AxisSpec = { label: FIGURES.residuals.xLabel, domain: extent(t) };
  const y: AxisSpec = { label: FIGURES.residuals.yLabel, domain: [yLo, yHi], log: true };

  const { svg: frameSvg, sx, sy } = axes(frame, x, y,
    `force-balance residual - ${manifest.scenario}`);
  let svg = svgOpen(frame.width, frame.height) + frameSvg;
  svg += polyline(t.map((v, i) => [sx(v), sy(rel[i])] as [number, number]), COLORS.blue);
  const tolY = sy(RESIDUAL_TOLERANCE);
  svg += polyline([[sx(x.domain[0]), tolY], [sx(x.domain[1]), tolY]], COLORS.amber, '6 4');
  svg += legend(frame, [
    { label: 'residual / max|force|', color: COLORS.blue },
    { label: `tolerance ${fmtTick(RESIDUAL_TOLERANCE)}`, color: COLORS.amber, dash: '6 4' },
  ]);
  return svg + svgClose();
}

function renderPhaseSpace(runDir: string, manifest: RunManifest): string {
  const file = requireArtifact(runDir, manifest, 'phase_space');
  const tab = readTable(file, SCHEMAS.phase_space);
  const t = col(tab, 't');
  const x = col(tab, 'x');
  const p = col(tab, 'p');
  const w0 = col(tab, 'rho0');

  const { starts, times } = frameStarts(t);
  const size = frameLength(file, starts, tab.rows);
  const start = starts[starts.length - 1];

  // Within a frame the momentum index runs fastest.
  let np = 1;
  while (np < size && x[start + np] === x[start]) np++;
  if (size % np !== 0) {
    throw new SchemaMismatchError(`${file}: phase-space frame is not a rectangular grid`);
  }
  const nx = size / np;
  const xs: number[] = [];
  for (let i = 0; i < nx; i++) xs.push(x[start + i * np]);
  const ps = p.slice(start, start + np);
  const dx = nx > 1 ? xs[1] - xs[0] : 1;
  const dp = np > 1 ? ps[1] - ps[0] : 1;

  const frame: Frame = {
    width: 720, height: 440,
    margin: { top: 40, right: 90, bottom: 50, left: 70 },
  };
  return cellPlot(
    frame,
    { label: FIGURES.phase_space.xLabel, domain: [xs[0] - dx / 2, xs[nx - 1] + dx / 2] },
    { label: FIGURES.phase_space.yLabel, domain: [ps[0] - dp / 2, ps[np - 1] + dp / 2] },
    `Wigner density w0(x, p) at t = ${fmtTick(times[times.length - 1])} - ${manifest.scenario}`,
    xs, ps,
    (xi, pi) => w0[start + xi * np + pi],
  );
}

function renderConvergence(runDir: string, manifest: RunManifest): string {
  const file = requireArtifact(runDir, manifest, 'convergence');
  const tab = readTable(file, SCHEMAS.convergence);
  const nu = col(tab, 'nu');
  const delta = col(tab, 'delta');
  const floor = col(tab, 'coherence_floor');

  const values = delta.concat(floor);
  const logX = nu.every((v) => v > 0);
  const logY = values.every((v) => v > 0);
  const [vLo, vHi] = extent(values);
  const x: AxisSpec = {
    label: FIGURES.convergence.xLabel,
    domain: logX ? [nu[0] / 1.5, nu[nu.length - 1] * 1.5] : padded(...extent(nu)),
    log: logX,
    ticks: nu,
  };
  const y: AxisSpec = {
    label: FIGURES.convergence.yLabel,
    domain: logY ? [vLo / 2, vHi * 2] : padded(vLo, vHi),
    log: logY,
  };

  const frame: Frame = {
    width: 680, height: 400,
    margin: { top: 40, right: 170, bottom: 50, left: 70 },
  };
  const series: Series[] = [
    { label: 'sector deviation delta', color: COLORS.blue, t: nu, y: delta },
    { label: 'coherence floor', color: COLORS.red, t: nu, y: floor },
  ];
  return linePlot(frame, x, y, `gauge-sector convergence - ${manifest.scenario}`,
    series, true);
}

/** Render one figure kind from a run directory with an already loaded manifest. */
export function renderKind(runDir: string, manifest: RunManifest, kind: FigureKind): string {
  switch (kind) {
    case 'heatmap': return renderHeatmap(runDir, manifest);
    case 'timeseries': return renderTimeseries(runDir, manifest);
    case 'residuals': return renderResiduals(runDir, manifest);
    case 'phase_space': return renderPhaseSpace(runDir, manifest);
    case 'convergence': return renderConvergence(runDir, manifest);
  }
}
