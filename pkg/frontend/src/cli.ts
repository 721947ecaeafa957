// Command-line entry point.
//
//   plot <run_dir> [--kinds kind [kind ...]] [--out dir]
//
// Renders figures from a finished run directory into --out (default: the
// current directory). The run directory itself is never written to.

import * as fs from 'fs';
import * as path from 'path';

import { PlotError } from './errors.js';
import { FIGURE_KINDS, FIGURES, FigureKind } from './figures.js';
import { asFigureKind, render } from './render.js';

const USAGE = `usage: plot <run_dir> [--kinds kind [kind ...]] [--out dir]

Render figures from a run directory as SVG files.

  --kinds   figure kinds to render (default: every kind the run provides)
            known kinds: ${FIGURE_KINDS.join(', ')}
  --out     output directory (default: current directory)
`;

interface CliArgs {
  runDir: string;
  kinds?: FigureKind[];
  out: string;
}

function parseArgs(argv: string[]): CliArgs | 'help' {
  let runDir: string | undefined;
  let kinds: FigureKind[] | undefined;
  let out = '.';
  let i = 0;
  while (i < argv.length) {
    const arg = argv[i];
    if (arg === '-h' || arg === '--help') {
      return 'help';
    } else if (arg === '--kinds') {
      kinds = kinds ?? [];
      i++;
      let seen = 0;
      while (i < argv.length && !argv[i].startsWith('-')) {
        for (const name of argv[i].split(',')) {
          if (name !== '') kinds.push(asFigureKind(name));
        }
        seen++;
        i++;
      }
      if (seen === 0) throw new PlotError('--kinds needs at least one kind');
    } else if (arg === '--out') {
      if (i + 1 >= argv.length) throw new PlotError('--out needs a directory');
      out = argv[i + 1];
      i += 2;
    } else if (arg.startsWith('-')) {
      throw new PlotError(`unknown option ${arg}`);
    } else if (runDir === undefined) {
      runDir = arg;
      i++;
    } else {
      throw new PlotError(`unexpected argument ${arg}`);
    }
  }
  if (runDir === undefined) throw new PlotError('missing run directory');
  return { runDir, kinds, out };
}

/** Run the CLI; returns the process exit code. */
export function cliMain(argv: string[]): number {
  let args: CliArgs | 'help';
  try {
    args = parseArgs(argv);
  } catch (err) {
    if (err instanceof PlotError) {
      console.error(`${err.name}: ${err.message}`);
      console.error(USAGE);
      return 1;
    }
    throw err;
  }
  if (args === 'help') {
    console.log(USAGE);
    return 0;
  }

  const runDir = path.resolve(args.runDir);
  const outDir = path.resolve(args.out);
  if (outDir === runDir || outDir.startsWith(runDir + path.sep)) {
    console.error('PlotError: refusing to write figures into the run directory; pick another --out');
    return 1;
  }

  try {
    const images = render(args.runDir, args.kinds);
    const kinds = Object.keys(images);
    if (kinds.length === 0) {
      console.error(`MissingSeriesError: ${args.runDir} provides no plottable series`);
      return 1;
    }
    fs.mkdirSync(outDir, { recursive: true });
    for (const kind of kinds) {
      const file = path.join(outDir, FIGURES[kind as FigureKind].output);
      fs.writeFileSync(file, images[kind]);
      console.log(`wrote ${file}`);
    }
    return 0;
  } catch (err) {
    if (err instanceof PlotError) {
      console.error(`${err.name}: ${err.message}`);
      return 1;
    }
    throw err;
  }
}
