"""Deterministic readers and writers for run directories.

All numeric CSV output uses a fixed header row and 17 significant digits, so
identical inputs produce identical bytes and values round-trip losslessly
through text.  JSON output is sorted and indented for the same reason.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .errors import ConfigError


def format_value(value: float) -> str:
    return f"{value:.17g}"


def write_csv(path, columns: dict) -> None:
    """Write named columns (equal-length 1d arrays) as CSV with a header row."""
    names = list(columns)
    arrays = [np.asarray(columns[name], dtype=float) for name in names]
    lengths = {a.shape[0] for a in arrays}
    if any(a.ndim != 1 for a in arrays) or len(lengths) != 1:
        raise ConfigError(f"CSV columns for {path} must be equal-length 1d arrays")
    with open(path, "w", encoding="ascii", newline="\n") as handle:
        handle.write(",".join(names) + "\n")
        for row in zip(*arrays):
            handle.write(",".join(format_value(v) for v in row) + "\n")


def read_csv(path) -> dict:
    """Read a write_csv file back into named float arrays."""
    with open(path, "r", encoding="ascii") as handle:
        header = handle.readline().strip()
        if not header:
            raise ConfigError(f"{path}: empty CSV")
        names = header.split(",")
        rows = [line.strip().split(",") for line in handle if line.strip()]
    if any(len(row) != len(names) for row in rows):
        raise ConfigError(f"{path}: ragged CSV rows")
    data = np.array(rows, dtype=float) if rows else np.empty((0, len(names)))
    return {name: data[:, j] for j, name in enumerate(names)}


def _plain(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def write_json(path, payload: dict) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as handle:
        json.dump(_plain(payload), handle, indent=2, sort_keys=True)
        handle.write("\n")


def read_json(path) -> dict:
    with open(path, "r", encoding="ascii") as handle:
        return json.load(handle)


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    digest.update(Path(path).read_bytes())
    return digest.hexdigest()


def unique_run_dir(root, name: str) -> Path:
    """Create and return root/name, suffixing -2, -3, ... on collision."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    candidate = root / name
    counter = 1
    while True:
        try:
            candidate.mkdir()
            return candidate
        except FileExistsError:
            counter += 1
            candidate = root / f"{name}-{counter}"
