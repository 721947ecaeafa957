"""Command line entry points.

    spindrift run <config> [--solver NAMES] [--seed K] [--nu-list A,B,...]
                           [--out DIR] [--parallel]
    spindrift validate <config>
    spindrift presets list

<config> is a path to an INI file or the name of a packaged preset.  Each run
writes one directory (under --out, $SPINDRIFT_OUTPUT_ROOT, or ./runs, with a
-2, -3, ... suffix on collision) holding the copied configuration, the CSV
artifacts, report.json, and manifest.json.

Exit codes: 0 success, 1 configuration error, 2 numerical failure, 3 one or
more scenario checks failed (the failing checks are named on stderr).
"""

from __future__ import annotations

import argparse
import os
import sys
from importlib import resources
from pathlib import Path

from .config import parse_config
from .errors import ConfigError, NumericsError
from .io import unique_run_dir
from .runner import execute_run

OUTPUT_ROOT_VAR = "SPINDRIFT_OUTPUT_ROOT"


class _ArgumentParser(argparse.ArgumentParser):
    """argparse with usage errors mapped to the configuration exit code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _preset_dir():
    return resources.files("spindrift").joinpath("presets")


def preset_names() -> list:
    return sorted(entry.name[:-4] for entry in _preset_dir().iterdir()
                  if entry.name.endswith(".cfg"))


def preset_summary(name: str) -> str:
    """First comment line of a packaged preset."""
    text = _preset_dir().joinpath(name + ".cfg").read_text(encoding="ascii")
    for line in text.splitlines():
        if line.startswith("#"):
            return line.lstrip("# ").strip()
        if line.strip():
            break
    return ""


def resolve_config(spec: str) -> Path:
    """Map a path or preset name to a readable configuration file."""
    path = Path(spec)
    if path.is_file():
        return path
    name = Path(spec[:-4] if spec.endswith(".cfg") else spec).name
    entry = _preset_dir().joinpath(name + ".cfg")
    if entry.is_file():
        with resources.as_file(entry) as real:
            return Path(str(real))
    raise ConfigError(
        f"no configuration file or preset named '{spec}'; presets: "
        + ", ".join(preset_names())
    )


def _overrides(args) -> dict:
    overrides = {}
    if args.solver is not None:
        overrides[("solvers", "enabled")] = args.solver
    if args.seed is not None:
        overrides[("trajectories", "base_seed")] = str(args.seed)
    if args.nu_list is not None:
        overrides[("gauge", "nu_values")] = " ".join(args.nu_list.split(","))
    return overrides


def _run_dir(args, config_path: Path) -> Path:
    if args.out is not None:
        out = Path(args.out)
        return unique_run_dir(out.parent if out.parent != Path("") else Path("."),
                              out.name)
    root = os.environ.get(OUTPUT_ROOT_VAR, "runs")
    return unique_run_dir(root, config_path.stem)


def _print_report(report: dict, stream) -> None:
    for check in report["checks"]:
        mark = "ok  " if check["passed"] else "FAIL"
        print(f"  {mark} {check['name']:<28} {check['value']:.3e} "
              f"(tolerance {check['tolerance']:g})", file=stream)
    cons = report["conservation"]
    if cons.get("checkpoints"):
        print(f"  conservation: trace rate {cons['max_trace_rate']:.2e}, "
              f"hermiticity {cons['max_hermiticity_per_step']:.2e} per step, "
              f"min eigenvalue {cons['min_eigenvalue']:.2e}", file=stream)


def _cmd_run(args) -> int:
    config_path = resolve_config(args.config)
    config = parse_config(config_path, overrides=_overrides(args))
    run_dir = _run_dir(args, config_path)
    print(f"run directory: {run_dir}")
    n_workers = os.cpu_count() if args.parallel else None
    report = execute_run(config, run_dir, n_workers=n_workers)
    _print_report(report, sys.stdout)
    if not report["passed"]:
        failed = [c for c in report["checks"] if not c["passed"]]
        for check in failed:
            print(f"check failed: {check['name']} (value {check['value']:.6g}, "
                  f"tolerance {check['tolerance']:g})", file=sys.stderr)
        return 3
    print("passed")
    return 0


def _cmd_validate(args) -> int:
    config = parse_config(resolve_config(args.config))
    print(config.describe())
    print("ok")
    return 0


def _cmd_presets(args) -> int:
    if args.action != "list":
        raise ConfigError(f"unknown presets action '{args.action}'; try: list")
    for name in preset_names():
        print(f"{name:<18} {preset_summary(name)}")
    return 0


def build_parser() -> _ArgumentParser:
    parser = _ArgumentParser(prog="spindrift",
                             description="spatially distributed spin measurement lab")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute a configuration and write a run directory")
    run.add_argument("config", help="configuration file or preset name")
    run.add_argument("--solver", help="override [solvers] enabled (space separated or 'all')")
    run.add_argument("--seed", type=int, help="override [trajectories] base_seed")
    run.add_argument("--nu-list", help="override [gauge] nu_values (comma separated)")
    run.add_argument("--out", help="exact run directory (default: root from "
                                   f"${OUTPUT_ROOT_VAR} or ./runs, named after the config)")
    run.add_argument("--parallel", action="store_true",
                     help="use all cores for the trajectory ensemble")
    run.set_defaults(func=_cmd_run)

    validate = sub.add_parser("validate", help="parse and validate a configuration")
    validate.add_argument("config", help="configuration file or preset name")
    validate.set_defaults(func=_cmd_validate)

    presets = sub.add_parser("presets", help="inspect packaged presets")
    presets.add_argument("action", help="'list' prints the packaged preset names")
    presets.set_defaults(func=_cmd_presets)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return 1
    except NumericsError as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
