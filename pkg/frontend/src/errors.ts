// Named error types for run-directory plotting.
//
// Every failure mode a caller can act on gets its own class: the CLI
// prints the class name, and tests match on it rather than on message
// wording.

/** Base class for everything thrown deliberately by this package. */
export class PlotError extends Error {
  constructor(message: string) {
    super(message);
    this.name = 'PlotError';
  }
}

/** The run directory has no readable manifest (or the manifest is not valid JSON). */
export class ManifestError extends PlotError {
  constructor(message: string) {
    super(message);
    this.name = 'ManifestError';
  }
}

/** A requested figure needs a series the run directory does not provide. */
export class MissingSeriesError extends PlotError {
  constructor(message: string) {
    super(message);
    this.name = 'MissingSeriesError';
  }
}

/** A data file exists but its header or cells do not match the documented schema. */
export class SchemaMismatchError extends PlotError {
  constructor(message: string) {
    super(message);
    this.name = 'SchemaMismatchError';
  }
}
