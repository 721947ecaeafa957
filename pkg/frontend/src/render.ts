// Top-level rendering entry points.
//
// A run directory is consumed strictly through its manifest: figure kinds
// are offered only when their input series are listed there, and every
// read goes through the schema-checked table reader.

import { PlotError } from './errors.js';
import { FIGURE_KINDS, FIGURES, FigureKind, renderKind } from './figures.js';
import { loadManifest } from './manifest.js';

/** Interpret a user-supplied kind name, or list the known ones. */
export function asFigureKind(name: string): FigureKind {
  if ((FIGURE_KINDS as readonly string[]).includes(name)) {
    return name as FigureKind;
  }
  throw new PlotError(`unknown figure kind ${name}; known kinds: ${FIGURE_KINDS.join(', ')}`);
}

/** Figure kinds whose input series the run directory provides. */
export function availableKinds(runDir: string): FigureKind[] {
  const manifest = loadManifest(runDir);
  return FIGURE_KINDS.filter((kind) =>
    FIGURES[kind].inputs.some((key) => manifest.artifacts[key] !== undefined));
}

/** Render a single figure kind to an SVG string. */
export function renderFigure(runDir: string, kind: FigureKind): string {
  return renderKind(runDir, loadManifest(runDir), kind);
}

/**
 * Render the requested kinds (default: all the run directory supports).
 * Returns one SVG string per kind, keyed by kind, in request order.
 */
export function render(runDir: string, kinds?: FigureKind[]): Record<string, string> {
  const manifest = loadManifest(runDir);
  const wanted = kinds ?? FIGURE_KINDS.filter((kind) =>
    FIGURES[kind].inputs.some((key) => manifest.artifacts[key] !== undefined));
  const images: Record<string, string> = {};
  for (const kind of wanted) {
    images[kind] = renderKind(runDir, manifest, kind);
  }
  return images;
}
