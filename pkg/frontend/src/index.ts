export { PlotError, ManifestError, MissingSeriesError, SchemaMismatchError } from './errors.js';
export { parseCsv, readTable, col } from './csv.js';
export type { Table } from './csv.js';
export { loadManifest, requireArtifact } from './manifest.js';
export type { RunManifest } from './manifest.js';
export { FIGURE_KINDS, FIGURES, SCHEMAS } from './figures.js';
export type { FigureKind, FigureSpec } from './figures.js';
export { render, renderFigure, availableKinds, asFigureKind } from './render.js';
export { cliMain } from './cli.js';
