// Run-directory manifest access.
//
// Every run directory is expected to carry a manifest.json naming its
// artifacts; all file lookups go through it rather than globbing, so a
// directory without a manifest is rejected up front.

import * as fs from 'fs';
import * as path from 'path';

import { ManifestError, MissingSeriesError } from './errors.js';

export interface RunManifest {
  scenario: string;
  version: string;
  config_sha256: string;
  base_seed: number | null;
  passed: boolean;
  /** Artifact key (e.g. "snapshots") to file name relative to the run directory. */
  artifacts: Record<string, string>;
}

/** Load and validate the manifest of a run directory. */
export function loadManifest(runDir: string): RunManifest {
  const file = path.join(runDir, 'manifest.json');
  let text: string;
  try {
    text = fs.readFileSync(file, 'utf8');
  } catch {
    throw new ManifestError(`${runDir}: no readable manifest.json`);
  }
  let data: unknown;
  try {
    data = JSON.parse(text);
  } catch {
    throw new ManifestError(`${file}: not valid JSON`);
  }
  if (typeof data !== 'object' || data === null) {
    throw new ManifestError(`${file}: manifest must be a JSON object`);
  }
  const manifest = data as Record<string, unknown>;
  if (typeof manifest.scenario !== 'string') {
    throw new ManifestError(`${file}: missing scenario`);
  }
  const artifacts = manifest.artifacts;
  if (typeof artifacts !== 'object' || artifacts === null ||
      Object.values(artifacts).some((v) => typeof v !== 'string')) {
    throw new ManifestError(`${file}: artifacts must map names to file names`);
  }
  return manifest as unknown as RunManifest;
}

/** Resolve an artifact key to an existing file, or raise the named error. */
export function requireArtifact(runDir: string, manifest: RunManifest, key: string): string {
  const name = manifest.artifacts[key];
  if (name === undefined) {
    throw new MissingSeriesError(
      `${runDir}: run provides no ${key} series (scenario ${manifest.scenario})`
    );
  }
  const file = path.join(runDir, name);
  if (!fs.existsSync(file)) {
    throw new MissingSeriesError(`${runDir}: manifest lists ${name} but the file is missing`);
  }
  return file;
}
